#pragma once

#include "dynamo/core.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dynamo {

/// A linear map between flat complex vectors together with its adjoint.
///
/// Operators whose domain is partly real (the affine motion parameters) carry
/// a `domain` projection. Such operators are real-linear and their adjoint is
/// taken with respect to Re<.,.>; dot_test honours this.
struct LinearOperator {
  std::string name;
  std::vector<Index> in_shape;
  std::vector<Index> out_shape;
  std::function<CVec(CVec const &)> forward;
  std::function<CVec(CVec const &)> backward;
  double norm_bound = 0.0;
  std::function<void(CVec &)> domain; // empty: full complex domain

  auto in_size() const -> Index;
  auto out_size() const -> Index;
  auto apply(CVec const &x) const -> CVec;
  auto adjoint(CVec const &z) const -> CVec;
  auto real_domain() const -> bool { return static_cast<bool>(domain); }
};

auto identity_op(Index n) -> LinearOperator;
auto zero_op(Index in, Index out) -> LinearOperator;
auto scaled(LinearOperator op, double s) -> LinearOperator;

/// outer(inner(x)).
auto compose(LinearOperator outer, LinearOperator inner) -> LinearOperator;

/// Restrict a block [offset, offset + op.in_size()) of a length-`total` vector
/// and apply `op` to it.
auto on_block(LinearOperator op, Index total, Index offset) -> LinearOperator;

/// Block row [B_1 B_2 ... B_k]: sum of operators acting on consecutive
/// blocks. All parts must share an output size.
auto block_row(std::vector<LinearOperator> parts) -> LinearOperator;

/// Masked unitary Fourier measurement. The mask is stored centred (DC at
/// (nx/2, ny/2)); measurements are ordered frame by frame, x fastest.
auto measure_op(Mask const &mask) -> LinearOperator;

/// Forward differences with a zero last row/column, stacked [grad_x; grad_y]
/// per frame.
auto grad_op(Index nx, Index ny, Index nt = 1) -> LinearOperator;

/// Unitary FFT along t for every pixel.
auto temporal_fft_op(Index nx, Index ny, Index nt) -> LinearOperator;

/// Reshape to the (nx*ny) x nt Casorati matrix (column t = frame t).
auto casorati_op(Index nx, Index ny, Index nt) -> LinearOperator;

/// Elementwise multiplication by fixed complex coefficients.
auto pointwise_scale_op(CVec coefficients) -> LinearOperator;

// ---------------------------------------------------------------------------
// B-spline windows at scale j.

struct WindowSpec {
  int degree = 3;
  int scale = 0;

  auto factor() const -> Index { return Index{1} << scale; }
};

/// Centered B-spline of degree n.
auto bspline(int degree, double x) -> double;

/// One axis of the dilated window. Node p of the coarse grid is centred at
/// pixel coordinate 2^j p + (2^j - 1)/2, and tap k reads pixel
/// 2^j p + first + k with weight weight[k] at signed distance delta[k] from the
/// centre.
struct WindowTaps {
  Index first = 0;
  std::vector<double> weight;
  std::vector<double> delta;

  auto sum() const -> double;
  auto centre(Index node, Index factor) const -> double;
};

auto window_taps(WindowSpec const &w) -> WindowTaps;

/// Separable windowed sum of one frame: out(p, q) = sum wx[a] wy[b] in(...),
/// zero outside the image. `wx`, `wy` are per-axis tap weights laid out like
/// WindowTaps::weight.
void window_sum(cx const *in, Index nx, Index ny, Index factor, Index first, std::vector<double> const &wx,
                std::vector<double> const &wy, cx *out);
void window_scatter(cx const *in, Index nx, Index ny, Index factor, Index first, std::vector<double> const &wx,
                    std::vector<double> const &wy, cx *out);

/// Weighted average at scale j followed by decimation by 2^j.
auto window_avg_op(WindowSpec const &window, Index nx, Index ny, Index nt) -> LinearOperator;

/// |<Ax, z> - <x, A*z>| / (|Ax| |z| + tiny) for random x, z.
auto dot_test(LinearOperator const &op, std::uint64_t seed) -> double;

/// Largest singular value estimate by power iteration on A*A.
auto power_norm(LinearOperator const &op, int iterations = 50, std::uint64_t seed = 7) -> double;

auto random_vector(Index n, std::uint64_t seed) -> CVec;

} // namespace dynamo
