#pragma once

#include "dynamo/core.hpp"

#include <functional>
#include <string>

namespace dynamo::prox {

/// A proximal map p -> argmin_x g(x) + |x - p|^2 / (2 s), paired with g itself
/// so optimality can be checked.
struct ProxFn {
  std::string name;
  std::function<CVec(CVec const &, double)> eval;
  std::function<double(CVec const &)> value;
};

/// prox of t|.|_1 with complex magnitude shrinkage.
auto soft_threshold(CVec const &p, double t) -> CVec;

/// Clamp every entry's magnitude to `radius`, keeping its phase.
auto project_linf_ball(CVec const &p, double radius) -> CVec;

/// prox_{s g*} for g(x) = 1/2 |x - b|^2.
auto prox_datafit_conj(CVec const &z, double s, CVec const &b) -> CVec;

/// Singular value thresholding of a rows x cols matrix stored column-major.
auto svt(CVec const &m, Index rows, Index cols, double t) -> CVec;

/// Moreau: prox_{s g*}(p) = p - s prox_{g/s}(p / s).
auto conj_prox(ProxFn const &g, double s, CVec const &p) -> CVec;

// Library of functions g with their proximal maps.
auto l1(double weight) -> ProxFn;
auto nuclear(double weight, Index rows, Index cols) -> ProxFn;
auto half_sq_dist(CVec b) -> ProxFn;                // 1/2 |x - b|^2
auto half_sq_norm(double weight) -> ProxFn;         // weight/2 |x|^2
auto linf_indicator(double radius) -> ProxFn;       // indicator of |x|_inf <= radius
auto zero_fn() -> ProxFn;

auto l1_norm(CVec const &x) -> double;
auto nuclear_norm(CVec const &m, Index rows, Index cols) -> double;

} // namespace dynamo::prox
