#pragma once

#include "dynamo/config.hpp"
#include "dynamo/operators.hpp"
#include "dynamo/pdal.hpp"

#include <array>
#include <vector>

namespace dynamo::mc {

/// Bilinear resampling of frame `source` at x - d(x, target) for every pixel x
/// of frame `target`. Taps falling outside the image are dropped (index -1).
struct WarpOperator {
  Index nx = 0;
  Index ny = 0;
  Index source = 0;
  Index target = 0;
  std::vector<std::array<Index, 4>> index;
  std::vector<std::array<double, 4>> weight;

  /// out[x] = sum_k weight[x][k] in[index[x][k]]
  void apply(cx const *in, cx *out) const;
  /// out[index[x][k]] += weight[x][k] z[x]
  void adjoint_add(cx const *z, cx *out) const;
};

/// One warp per frame t, reading frame t - 1 (frame nt - 1 for t = 0).
auto build_warp(DenseMotionField const &motion) -> std::vector<WarpOperator>;

/// Single-frame operator view of a warp, for testing.
auto warp_op(WarpOperator const &w) -> LinearOperator;

/// (D f)_t = M_t f_{t-1} - f_t. Without wrap the t = 0 row is zero.
auto difference_op(std::vector<WarpOperator> const &warps, Shape3 const &shape, bool wrap = true) -> LinearOperator;

struct McResult {
  Sequence f;
  pdal::SolveTrace trace;
  pdal::StopReason reason = pdal::StopReason::MaxIterations;
  double objective = 0.0; // 1/2 |A f - b|^2 + lambda |D f|_1 at the returned f
};

/// 1/2 |A f - b|^2 + lambda |D f|_1.
auto mc_objective(Sequence const &f, CVec const &b, LinearOperator const &a, LinearOperator const &d, double lambda)
  -> double;

/// Motion-compensated refinement warm-started at f_init. With lambda = 0 the
/// data term alone is minimised in closed form: f_init + A*(b - A f_init).
auto mc_refine(Sequence const &f_init, CVec const &b, Mask const &mask, DenseMotionField const &motion, double lambda,
               pdal::Params const &params, bool wrap = true) -> McResult;

} // namespace dynamo::mc
