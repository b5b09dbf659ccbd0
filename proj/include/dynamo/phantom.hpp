#pragma once

#include "dynamo/core.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace dynamo::phantom {

using Vec2 = std::array<double, 2>;

/// Pose of an ellipse at frame t:
///   T_t(p) = pivot + (1 + scale_rate t) R(rotation_rate t) (p - pivot) + shift(t)
///   shift(t) = velocity t + amplitude sin(2 pi t / period)
struct MotionLaw {
  Vec2 velocity{0.0, 0.0};  // px / frame
  Vec2 amplitude{0.0, 0.0}; // px, periodic component (needs period > 0)
  double period = 0.0;      // frames
  double rotation_rate = 0.0; // rad / frame
  double scale_rate = 0.0;    // relative size change / frame
  std::optional<Vec2> pivot;  // defaults to the ellipse centre

  auto transform(Vec2 const &pivot_point, double t, Vec2 const &p) const -> Vec2;
  auto inverse(Vec2 const &pivot_point, double t, Vec2 const &x) const -> Vec2;
};

struct Ellipse {
  Vec2 centre{0.0, 0.0};
  Vec2 semi_axes{1.0, 1.0};
  double angle = 0.0;
  cx intensity{1.0, 0.0};
  MotionLaw motion;
};

struct PhantomSpec {
  Index nx = 64;
  Index ny = 64;
  Index nt = 16;
  std::vector<Ellipse> ellipses;
  double noise_sigma = 0.0;
};

struct Phantom {
  Sequence f;
  DenseMotionField motion; // t -> t-1 (circular), see DenseMotionField
  Mask object;             // pixels covered by at least one ellipse
};

/// Render the sequence with anti-aliased edges and evaluate the analytic
/// backward displacement of every pixel. Throws DomainError if an ellipse
/// leaves the field of view in any frame.
auto generate_phantom(PhantomSpec const &spec, std::uint64_t seed) -> Phantom;

/// Named test objects: "static", "translate", "rotate".
auto preset(std::string const &name, Index nx = 64, Index ny = 64, Index nt = 16, double noise_sigma = 0.0)
  -> PhantomSpec;

auto spec_from_json(std::string const &text) -> PhantomSpec;

} // namespace dynamo::phantom
