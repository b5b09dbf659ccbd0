#include "dynamo/mc.hpp"

#include "dynamo/prox.hpp"

#include <cmath>

namespace dynamo::mc {

void WarpOperator::apply(cx const *in, cx *out) const
{
  for (std::size_t i = 0; i < index.size(); ++i) {
    cx s{};
    for (std::size_t k = 0; k < 4; ++k) {
      if (index[i][k] >= 0) { s += weight[i][k] * in[index[i][k]]; }
    }
    out[i] = s;
  }
}

void WarpOperator::adjoint_add(cx const *z, cx *out) const
{
  for (std::size_t i = 0; i < index.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      if (index[i][k] >= 0) { out[index[i][k]] += weight[i][k] * z[i]; }
    }
  }
}

auto build_warp(DenseMotionField const &motion) -> std::vector<WarpOperator>
{
  auto const s = motion.shape();
  if (motion.v.shape != s) { throw ShapeError("build_warp: u and v differ in shape"); }
  for (std::size_t i = 0; i < motion.u.data.size(); ++i) {
    if (!std::isfinite(motion.u.data[i]) || !std::isfinite(motion.v.data[i])) {
      throw DomainError("build_warp: non-finite displacement");
    }
  }
  std::vector<WarpOperator> warps(static_cast<std::size_t>(s.nt));
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < s.nt; ++t) {
    auto &w = warps[static_cast<std::size_t>(t)];
    w.nx = s.nx;
    w.ny = s.ny;
    w.target = t;
    w.source = t == 0 ? s.nt - 1 : t - 1;
    w.index.resize(static_cast<std::size_t>(s.pixels()));
    w.weight.resize(static_cast<std::size_t>(s.pixels()));
    for (Index y = 0; y < s.ny; ++y) {
      for (Index x = 0; x < s.nx; ++x) {
        double const px = static_cast<double>(x) - motion.u(x, y, t);
        double const py = static_cast<double>(y) - motion.v(x, y, t);
        double const fx = std::floor(px);
        double const fy = std::floor(py);
        double const ax = px - fx;
        double const ay = py - fy;
        auto const x0 = static_cast<Index>(fx);
        auto const y0 = static_cast<Index>(fy);
        std::array<Index, 4> idx{};
        std::array<double, 4> wt{(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
        Index const xs[4] = {x0, x0 + 1, x0, x0 + 1};
        Index const ys[4] = {y0, y0, y0 + 1, y0 + 1};
        for (std::size_t k = 0; k < 4; ++k) {
          bool const in = xs[k] >= 0 && xs[k] < s.nx && ys[k] >= 0 && ys[k] < s.ny;
          idx[k] = in ? xs[k] + s.nx * ys[k] : -1;
          if (!in) { wt[k] = 0.0; }
        }
        auto const i = static_cast<std::size_t>(x + s.nx * y);
        w.index[i] = idx;
        w.weight[i] = wt;
      }
    }
  }
  return warps;
}

auto warp_op(WarpOperator const &w) -> LinearOperator
{
  Index const n = w.nx * w.ny;
  LinearOperator op;
  op.name = "warp";
  op.in_shape = {w.nx, w.ny};
  op.out_shape = {w.nx, w.ny};
  op.norm_bound = 4.0;
  op.forward = [w, n](CVec const &x) {
    CVec y(static_cast<std::size_t>(n));
    w.apply(x.data(), y.data());
    return y;
  };
  op.backward = [w, n](CVec const &z) {
    CVec x(static_cast<std::size_t>(n));
    w.adjoint_add(z.data(), x.data());
    return x;
  };
  return op;
}

auto difference_op(std::vector<WarpOperator> const &warps, Shape3 const &shape, bool wrap) -> LinearOperator
{
  if (static_cast<Index>(warps.size()) != shape.nt) { throw ShapeError("difference_op: one warp per frame required"); }
  for (auto const &w : warps) {
    if (w.nx != shape.nx || w.ny != shape.ny) { throw ShapeError("difference_op: warp grid mismatch"); }
  }
  Index const np = shape.pixels();
  Index const nt = shape.nt;
  Index const t0 = wrap ? 0 : 1;
  LinearOperator op;
  op.name = "mc_diff";
  op.in_shape = {shape.nx, shape.ny, shape.nt};
  op.out_shape = {shape.nx, shape.ny, shape.nt};
  // Bilinear weights are nonnegative and sum to at most one per row; each
  // source pixel receives at most four taps.
  op.norm_bound = 1.0 + 2.0;
  op.forward = [warps, np, nt, t0](CVec const &x) {
    CVec y(static_cast<std::size_t>(np * nt));
#pragma omp parallel for schedule(static)
    for (Index t = t0; t < nt; ++t) {
      auto const &w = warps[static_cast<std::size_t>(t)];
      auto *out = y.data() + t * np;
      w.apply(x.data() + w.source * np, out);
      auto const *ft = x.data() + t * np;
      for (Index i = 0; i < np; ++i) {
        out[i] -= ft[i];
      }
    }
    return y;
  };
  op.backward = [warps, np, nt, t0](CVec const &z) {
    CVec x(static_cast<std::size_t>(np * nt));
    // Frame s collects -z_s from its own row and M_{s+1}^T z_{s+1}; looping
    // over source frames keeps writes disjoint.
#pragma omp parallel for schedule(static)
    for (Index s = 0; s < nt; ++s) {
      auto *out = x.data() + s * np;
      if (s >= t0) {
        auto const *zs = z.data() + s * np;
        for (Index i = 0; i < np; ++i) {
          out[i] -= zs[i];
        }
      }
      Index const t = s + 1 == nt ? 0 : s + 1;
      if (t >= t0) { warps[static_cast<std::size_t>(t)].adjoint_add(z.data() + t * np, out); }
    }
    return x;
  };
  return op;
}

auto mc_objective(Sequence const &f, CVec const &b, LinearOperator const &a, LinearOperator const &d, double lambda)
  -> double
{
  double const r = norm2(sub(a.apply(f.data), b));
  double obj = 0.5 * r * r;
  if (lambda > 0.0) { obj += lambda * prox::l1_norm(d.apply(f.data)); }
  return obj;
}

auto mc_refine(Sequence const &f_init, CVec const &b, Mask const &mask, DenseMotionField const &motion, double lambda,
               pdal::Params const &params, bool wrap) -> McResult
{
  if (!(lambda >= 0.0)) { throw ConfigError("mc_refine: lambda must be nonnegative"); }
  if (f_init.shape != mask.shape || motion.shape() != mask.shape) { throw ShapeError("mc_refine: shape mismatch"); }
  auto const a = measure_op(mask);
  if (static_cast<Index>(b.size()) != a.out_size()) { throw ShapeError("mc_refine: k-space length does not match mask"); }
  auto const d = difference_op(build_warp(motion), mask.shape, wrap);
  McResult out;
  if (lambda == 0.0) {
    auto r = a.adjoint(sub(b, a.apply(f_init.data)));
    CVec f = f_init.data;
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] += r[i];
    }
    out.f = Sequence(f_init.shape, std::move(f));
    out.reason = pdal::StopReason::Converged;
    out.objective = mc_objective(out.f, b, a, d, 0.0);
    return out;
  }
  pdal::SaddleProblem problem;
  pdal::Term data;
  data.name = "data";
  data.op = a;
  data.conj_prox = [b](CVec const &z, double s) { return prox::prox_datafit_conj(z, s, b); };
  data.cost = [b](CVec const &v) {
    double const r = norm2(sub(v, b));
    return 0.5 * r * r;
  };
  pdal::Term comp;
  comp.name = "mc";
  comp.op = d;
  comp.conj_prox = [lambda](CVec const &z, double) { return prox::project_linf_ball(z, lambda); };
  comp.cost = [lambda](CVec const &v) { return lambda * prox::l1_norm(v); };
  problem.terms = {data, comp};
  auto res = pdal::solve(problem, f_init.data, {}, params);
  out.f = Sequence(f_init.shape, std::move(res.y));
  out.trace = std::move(res.trace);
  out.reason = res.reason;
  out.objective = mc_objective(out.f, b, a, d, lambda);
  return out;
}

} // namespace dynamo::mc
