#pragma once

#include "dynamo/config.hpp"
#include "dynamo/operators.hpp"
#include "dynamo/pdal.hpp"

#include <array>
#include <optional>

namespace dynamo::oflow {

/// Local affine motion on the coarse grid of scale j. Parameter k of node p
/// describes u = u0 + u1 (x - x_p) + u2 (y - y_p), v likewise, with (x_p, y_p)
/// the window centre of the node.
struct AffineMotionField {
  int scale = 0;
  Shape3 coarse;
  std::array<RealVolume, 6> p; // u0, u1, u2, v0, v1, v2

  AffineMotionField() = default;
  AffineMotionField(Shape3 coarse_shape, int j);
};

/// Windowed coefficients of the linearised constancy constraint.
struct OfCoefficients {
  Shape3 coarse;
  std::array<CVec, 6> grad; // <dx fb>, <x dx fb>, <y dx fb>, <dy fb>, <x dy fb>, <y dy fb>
  CVec offset;              // <fb>
};

/// Circular forward shift by one frame: out_0 = f_{nt-1}, out_t = f_{t-1}.
auto shift_sequence(Sequence const &f) -> Sequence;

/// Central differences with replicated boundary.
auto partial_x(Sequence const &f) -> Sequence;
auto partial_y(Sequence const &f) -> Sequence;

auto coarse_shape(Shape3 const &image, WindowSpec const &window) -> Shape3;

auto of_coefficients(Sequence const &fbar, WindowSpec const &window) -> OfCoefficients;

struct OfScaling {
  double row = 1.0;                                   // multiplies the whole residual
  std::array<double, 6> param{1.0, 1.0, 1.0, 1.0, 1.0, 1.0}; // u_k = param[k] * stored value
};

/// Input [f, u0, u1, u2, v0, v1, v2]; output <f> + sum_k coeff_k u_k on the
/// coarse grid. Parameter blocks are real. Without wrap the frame 0 rows are
/// zero.
auto of_constraint_op(OfCoefficients const &c, WindowSpec const &window, Shape3 const &image, bool wrap = true,
                      OfScaling const &scaling = {}) -> LinearOperator;

/// The solver vector is [f, a0, a1, a2, b0, b1, b2] / scaling, where the
/// intercepts a0, b0 are taken about the image centre rather than the node
/// centre (u0 = a0 + a1 X + a2 Y with (X, Y) the node offset from the image
/// centre). A single global affine motion then has constant parameters, and
/// the motion smoother acts on these.
struct JointProblem {
  pdal::SaddleProblem problem;
  Shape3 image;
  Shape3 coarse;
  OfScaling scaling;
  OfCoefficients coeffs; // node-centred, as of_coefficients returns them
  RVec offset_x;
  RVec offset_y;

  auto pack(Sequence const &f, AffineMotionField const &m) const -> CVec;
  void unpack(CVec const &y, Sequence &f, AffineMotionField &m) const;
};

/// Joint reconstruction and motion problem at one scale. Terms with zero
/// weight are omitted. `scaling` fixes the internal variable scaling; by
/// default it is chosen from the coefficient magnitudes.
auto assemble_joint(CVec const &b, Mask const &mask, Sequence const &fbar, WindowSpec const &window,
                    RunConfig const &cfg, std::optional<OfScaling> scaling = std::nullopt) -> JointProblem;

struct JpdalResult {
  Sequence f;
  AffineMotionField motion;
  pdal::SolveTrace trace;
  pdal::StopReason reason = pdal::StopReason::MaxIterations;
  int refreshes = 0;
};

/// Joint estimation at scale `window.scale`. The shifted sequence and its
/// coefficients are rebuilt from the current estimate every
/// cfg.refresh_interval iterations, keeping duals and step size.
auto jpdal(CVec const &b, Mask const &mask, Sequence const &f_init, WindowSpec const &window, RunConfig const &cfg,
           std::optional<AffineMotionField> motion_init = std::nullopt) -> JpdalResult;

/// Evaluate the affine model of the nearest node at every pixel, then smooth
/// once with the integer-sampled B-spline kernel of the given degree.
auto densify_motion(AffineMotionField const &field, Index nx, Index ny, int degree = 3) -> DenseMotionField;

/// Same evaluation without the smoothing pass.
auto evaluate_motion(AffineMotionField const &field, Index nx, Index ny) -> DenseMotionField;

/// Carry parameters to a finer scale: each fine node inherits its parent's
/// model re-centred on its own window centre.
auto upsample_motion(AffineMotionField const &field, int scale) -> AffineMotionField;

/// Largest displacement magnitude in a dense field.
auto max_displacement(DenseMotionField const &d) -> double;

} // namespace dynamo::oflow
