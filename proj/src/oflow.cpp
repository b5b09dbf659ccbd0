#include "dynamo/oflow.hpp"

#include "dynamo/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace dynamo::oflow {

AffineMotionField::AffineMotionField(Shape3 coarse_shape, int j)
  : scale{j}
  , coarse{coarse_shape}
{
  for (auto &v : p) {
    v = RealVolume(coarse_shape);
  }
}

auto shift_sequence(Sequence const &f) -> Sequence
{
  if (f.shape.nt < 2) { throw DomainError("shift_sequence: need at least two frames"); }
  Sequence out(f.shape);
  Index const np = f.shape.pixels();
  for (Index t = 0; t < f.shape.nt; ++t) {
    Index const src = t == 0 ? f.shape.nt - 1 : t - 1;
    std::copy(f.frame(src), f.frame(src) + np, out.frame(t));
  }
  return out;
}

auto partial_x(Sequence const &f) -> Sequence
{
  Sequence d(f.shape);
  auto const [nx, ny, nt] = f.shape;
  for (Index t = 0; t < nt; ++t) {
    for (Index y = 0; y < ny; ++y) {
      for (Index x = 0; x < nx; ++x) {
        d(x, y, t) = 0.5 * (f(std::min(x + 1, nx - 1), y, t) - f(std::max(x - 1, Index{0}), y, t));
      }
    }
  }
  return d;
}

auto partial_y(Sequence const &f) -> Sequence
{
  Sequence d(f.shape);
  auto const [nx, ny, nt] = f.shape;
  for (Index t = 0; t < nt; ++t) {
    for (Index y = 0; y < ny; ++y) {
      for (Index x = 0; x < nx; ++x) {
        d(x, y, t) = 0.5 * (f(x, std::min(y + 1, ny - 1), t) - f(x, std::max(y - 1, Index{0}), t));
      }
    }
  }
  return d;
}

auto coarse_shape(Shape3 const &image, WindowSpec const &window) -> Shape3
{
  Index const f = window.factor();
  if (image.nx % f != 0 || image.ny % f != 0) {
    throw ShapeError("image " + to_string(image) + " is not divisible by 2^" + std::to_string(window.scale));
  }
  return {image.nx / f, image.ny / f, image.nt};
}

auto of_coefficients(Sequence const &fbar, WindowSpec const &window) -> OfCoefficients
{
  OfCoefficients c;
  c.coarse = coarse_shape(fbar.shape, window);
  auto const taps = window_taps(window);
  std::vector<double> wd(taps.weight.size());
  for (std::size_t k = 0; k < wd.size(); ++k) {
    wd[k] = taps.weight[k] * taps.delta[k];
  }
  auto const dx = partial_x(fbar);
  auto const dy = partial_y(fbar);
  auto const [nx, ny, nt] = fbar.shape;
  Index const f = window.factor();
  Index const m = c.coarse.pixels();
  for (auto &g : c.grad) {
    g.assign(static_cast<std::size_t>(c.coarse.size()), cx{});
  }
  c.offset.assign(static_cast<std::size_t>(c.coarse.size()), cx{});
  auto const &w = taps.weight;
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < nt; ++t) {
    window_sum(dx.frame(t), nx, ny, f, taps.first, w, w, c.grad[0].data() + t * m);
    window_sum(dx.frame(t), nx, ny, f, taps.first, wd, w, c.grad[1].data() + t * m);
    window_sum(dx.frame(t), nx, ny, f, taps.first, w, wd, c.grad[2].data() + t * m);
    window_sum(dy.frame(t), nx, ny, f, taps.first, w, w, c.grad[3].data() + t * m);
    window_sum(dy.frame(t), nx, ny, f, taps.first, wd, w, c.grad[4].data() + t * m);
    window_sum(dy.frame(t), nx, ny, f, taps.first, w, wd, c.grad[5].data() + t * m);
    window_sum(fbar.frame(t), nx, ny, f, taps.first, w, w, c.offset.data() + t * m);
  }
  return c;
}

auto of_constraint_op(OfCoefficients const &c, WindowSpec const &window, Shape3 const &image, bool wrap,
                      OfScaling const &scaling) -> LinearOperator
{
  auto const coarse = coarse_shape(image, window);
  if (coarse != c.coarse) { throw ShapeError("of_constraint_op: coefficients do not match the image grid"); }
  for (auto const &g : c.grad) {
    if (static_cast<Index>(g.size()) != coarse.size()) { throw ShapeError("of_constraint_op: coefficient length"); }
  }
  auto const w = window_avg_op(window, image.nx, image.ny, image.nt);
  Index const n = image.size();
  Index const m = coarse.size();
  Index const mp = coarse.pixels();
  // Effective per-parameter coefficients, scaling folded in.
  std::array<CVec, 6> coef;
  double n2 = w.norm_bound * w.norm_bound;
  for (std::size_t k = 0; k < 6; ++k) {
    coef[k] = c.grad[k];
    for (auto &v : coef[k]) {
      v *= scaling.param[k];
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) { throw DomainError("of_constraint_op: non-finite coefficient"); }
    }
    double const mx = norm_inf(coef[k]);
    n2 += mx * mx;
  }
  double const row = scaling.row;
  Index const first_row = wrap ? 0 : mp;

  LinearOperator op;
  op.name = "of";
  op.in_shape = {n + 6 * m};
  op.out_shape = {coarse.nx, coarse.ny, coarse.nt};
  op.norm_bound = row * std::sqrt(n2);
  op.domain = [n](CVec &x) {
    for (std::size_t i = static_cast<std::size_t>(n); i < x.size(); ++i) {
      x[i] = cx{x[i].real(), 0.0};
    }
  };
  op.forward = [w, coef, n, m, row, first_row](CVec const &x) {
    auto r = w.forward(CVec(x.begin(), x.begin() + n));
    for (std::size_t k = 0; k < 6; ++k) {
      auto const *u = x.data() + n + static_cast<Index>(k) * m;
      for (Index i = 0; i < m; ++i) {
        r[static_cast<std::size_t>(i)] += coef[k][static_cast<std::size_t>(i)] * u[i].real();
      }
    }
    for (Index i = 0; i < m; ++i) {
      r[static_cast<std::size_t>(i)] = i < first_row ? cx{} : row * r[static_cast<std::size_t>(i)];
    }
    return r;
  };
  op.backward = [w, coef, n, m, row, first_row](CVec const &z) {
    CVec zz(z.size());
    for (Index i = first_row; i < m; ++i) {
      zz[static_cast<std::size_t>(i)] = row * z[static_cast<std::size_t>(i)];
    }
    auto xf = w.backward(zz);
    CVec x(static_cast<std::size_t>(n + 6 * m));
    std::copy(xf.begin(), xf.end(), x.begin());
    for (std::size_t k = 0; k < 6; ++k) {
      auto *u = x.data() + n + static_cast<Index>(k) * m;
      for (Index i = 0; i < m; ++i) {
        u[i] = cx{(std::conj(coef[k][static_cast<std::size_t>(i)]) * zz[static_cast<std::size_t>(i)]).real(), 0.0};
      }
    }
    return x;
  };
  return op;
}

namespace {

auto prior_l1_term(LinearOperator t, double weight, Index total) -> pdal::Term
{
  pdal::Term term;
  term.name = "l1";
  term.op = on_block(std::move(t), total, 0);
  term.conj_prox = [weight](CVec const &z, double) { return prox::project_linf_ball(z, weight); };
  term.cost = [weight](CVec const &v) { return weight * prox::l1_norm(v); };
  return term;
}

auto prior_terms(Shape3 const &s, RunConfig const &cfg, Index total) -> std::vector<pdal::Term>
{
  std::vector<pdal::Term> terms;
  auto sparse = [&](double weight) {
    if (weight <= 0.0) { return; }
    auto t = cfg.transform == SparsifyingTransform::TemporalFFT ? temporal_fft_op(s.nx, s.ny, s.nt) : identity_op(s.size());
    terms.push_back(prior_l1_term(std::move(t), weight, total));
  };
  auto tv = [&](double weight) {
    if (weight <= 0.0) { return; }
    auto term = prior_l1_term(grad_op(s.nx, s.ny, s.nt), weight, total);
    term.name = "tv";
    terms.push_back(std::move(term));
  };
  auto low_rank = [&](double weight) {
    if (weight <= 0.0) { return; }
    pdal::Term term;
    term.name = "low_rank";
    term.op = on_block(casorati_op(s.nx, s.ny, s.nt), total, 0);
    auto g = prox::nuclear(weight, s.pixels(), s.nt);
    term.conj_prox = [g](CVec const &z, double step) { return prox::conj_prox(g, step, z); };
    term.cost = g.value;
    terms.push_back(std::move(term));
  };
  switch (cfg.prior) {
  case Prior::L1: sparse(cfg.eta); break;
  case Prior::TV: tv(cfg.eta); break;
  case Prior::LowRank: low_rank(cfg.eta); break;
  case Prior::L1TV:
    sparse(cfg.eta);
    tv(cfg.eta2);
    break;
  case Prior::LowRankL1:
    low_rank(cfg.eta);
    sparse(cfg.eta2);
    break;
  }
  return terms;
}

// Largest per-iteration change aimed for in u0 and v0 at the strongest node,
// in pixels; slopes get the same target spread over a window.
constexpr double kMotionStep = 0.1;

auto default_scaling(OfCoefficients const &c, LinearOperator const &w, double tau, int scale) -> OfScaling
{
  OfScaling s;
  double bound = w.norm_bound;
  for (std::size_t k = 0; k < 6; ++k) {
    double const cmax = norm_inf(c.grad[k]);
    double const target = (k % 3 == 0) ? kMotionStep : kMotionStep / static_cast<double>(Index{1} << scale);
    double m = 1.0;
    if (tau > 0.0 && cmax > 0.0) { m = std::clamp(std::sqrt(target / (tau * cmax)), 1e-3, 1e3); }
    s.param[k] = m;
    bound = std::max(bound, m * cmax);
  }
  s.row = bound > 0.0 ? 1.0 / bound : 1.0;
  return s;
}

// Node centre minus image centre, per coarse node.
auto node_offsets(Shape3 const &coarse, int scale, Shape3 const &image) -> std::pair<RVec, RVec>
{
  Index const f = Index{1} << scale;
  double const half = 0.5 * static_cast<double>(f - 1);
  double const cx0 = 0.5 * static_cast<double>(image.nx - 1);
  double const cy0 = 0.5 * static_cast<double>(image.ny - 1);
  RVec ox(static_cast<std::size_t>(coarse.size())), oy(ox.size());
  for (Index t = 0; t < coarse.nt; ++t) {
    for (Index q = 0; q < coarse.ny; ++q) {
      for (Index p = 0; p < coarse.nx; ++p) {
        auto const i = static_cast<std::size_t>(coarse.offset(p, q, t));
        ox[i] = static_cast<double>(f * p) + half - cx0;
        oy[i] = static_cast<double>(f * q) + half - cy0;
      }
    }
  }
  return {ox, oy};
}

// Coefficients for intercepts taken about the image centre:
// u0 = a0 + a1 X + a2 Y turns coef0 u0 + coef1 u1 + coef2 u2 into
// coef0 a0 + (coef1 + X coef0) a1 + (coef2 + Y coef0) a2.
auto to_global(OfCoefficients c, RVec const &ox, RVec const &oy) -> OfCoefficients
{
  for (std::size_t base : {std::size_t{0}, std::size_t{3}}) {
    for (std::size_t i = 0; i < ox.size(); ++i) {
      c.grad[base + 1][i] += ox[i] * c.grad[base][i];
      c.grad[base + 2][i] += oy[i] * c.grad[base][i];
    }
  }
  return c;
}

} // namespace

auto assemble_joint(CVec const &b, Mask const &mask, Sequence const &fbar, WindowSpec const &window,
                    RunConfig const &cfg, std::optional<OfScaling> scaling) -> JointProblem
{
  if (cfg.eta < 0.0 || cfg.eta2 < 0.0 || cfg.tau < 0.0 || cfg.gamma < 0.0) {
    throw ConfigError("assemble_joint: weights must be nonnegative");
  }
  if (fbar.shape != mask.shape) { throw ShapeError("assemble_joint: shifted sequence and mask differ in shape"); }
  JointProblem jp;
  jp.image = fbar.shape;
  jp.coarse = coarse_shape(fbar.shape, window);
  jp.coeffs = of_coefficients(fbar, window);
  std::tie(jp.offset_x, jp.offset_y) = node_offsets(jp.coarse, window.scale, jp.image);
  auto const global = to_global(jp.coeffs, jp.offset_x, jp.offset_y);
  auto const w = window_avg_op(window, jp.image.nx, jp.image.ny, jp.image.nt);
  jp.scaling = scaling ? *scaling : default_scaling(global, w, cfg.tau, window.scale);
  Index const n = jp.image.size();
  Index const m = jp.coarse.size();
  Index const total = n + 6 * m;
  auto &terms = jp.problem.terms;

  pdal::Term data;
  data.name = "data";
  data.op = on_block(measure_op(mask), total, 0);
  if (static_cast<Index>(b.size()) != data.op.out_size()) {
    throw ShapeError("assemble_joint: k-space has " + std::to_string(b.size()) + " samples, mask selects " +
                     std::to_string(data.op.out_size()));
  }
  data.conj_prox = [b](CVec const &z, double s) { return prox::prox_datafit_conj(z, s, b); };
  data.cost = [b](CVec const &v) {
    double const r = norm2(sub(v, b));
    return 0.5 * r * r;
  };
  terms.push_back(std::move(data));

  for (auto &t : prior_terms(jp.image, cfg, total)) {
    terms.push_back(std::move(t));
  }

  if (cfg.tau > 0.0) {
    pdal::Term of;
    of.name = "of";
    of.op = of_constraint_op(global, window, jp.image, cfg.wrap, jp.scaling);
    // The residual is carried multiplied by `row`; the function is rescaled to
    // match so the objective is unchanged.
    double const row = jp.scaling.row;
    double const radius = cfg.tau / row;
    CVec off = jp.coeffs.offset;
    if (!cfg.wrap) { std::fill(off.begin(), off.begin() + jp.coarse.pixels(), cx{}); }
    for (auto &v : off) {
      v *= row;
    }
    of.conj_prox = [off, radius](CVec const &z, double s) {
      CVec p(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = z[i] - s * off[i];
      }
      return prox::project_linf_ball(p, radius);
    };
    of.cost = [off, radius](CVec const &v) { return radius * prox::l1_norm(sub(v, off)); };
    terms.push_back(std::move(of));
  }

  if (cfg.gamma > 0.0) {
    for (std::size_t k = 0; k < 6; ++k) {
      pdal::Term tv;
      tv.name = "motion_" + std::to_string(k);
      // Stored values are u_k / param[k], so the smoother on u_k becomes one on
      // the stored block with its weight rescaled.
      tv.op = on_block(grad_op(jp.coarse.nx, jp.coarse.ny, jp.coarse.nt), total, n + static_cast<Index>(k) * m);
      double const mk = jp.scaling.param[k];
      if (cfg.motion_smoother == MotionSmoother::TV) {
        double const gamma = cfg.gamma * mk;
        tv.conj_prox = [gamma](CVec const &z, double) { return prox::project_linf_ball(z, gamma); };
        tv.cost = [gamma](CVec const &v) { return gamma * prox::l1_norm(v); };
      } else {
        double const gamma = cfg.gamma * mk * mk;
        tv.conj_prox = [gamma](CVec const &z, double s) {
          CVec out(z);
          for (auto &v : out) {
            v *= gamma / (gamma + s);
          }
          return out;
        };
        tv.cost = [gamma](CVec const &v) {
          double const r = norm2(v);
          return 0.5 * gamma * r * r;
        };
      }
      terms.push_back(std::move(tv));
    }
  }

  jp.problem.primal_prox = [n](CVec const &y, double) {
    CVec out(y);
    for (std::size_t i = static_cast<std::size_t>(n); i < out.size(); ++i) {
      out[i] = cx{out[i].real(), 0.0};
    }
    return out;
  };
  return jp;
}

auto JointProblem::pack(Sequence const &f, AffineMotionField const &mf) const -> CVec
{
  if (f.shape != image || mf.coarse != coarse) { throw ShapeError("pack: shape mismatch"); }
  Index const n = image.size();
  Index const m = coarse.size();
  CVec y(static_cast<std::size_t>(n + 6 * m));
  std::copy(f.data.begin(), f.data.end(), y.begin());
  for (std::size_t k = 0; k < 6; ++k) {
    for (Index i = 0; i < m; ++i) {
      auto const ii = static_cast<std::size_t>(i);
      double v = mf.p[k].data[ii];
      if (k % 3 == 0) { v -= mf.p[k + 1].data[ii] * offset_x[ii] + mf.p[k + 2].data[ii] * offset_y[ii]; }
      y[static_cast<std::size_t>(n + static_cast<Index>(k) * m + i)] = v / scaling.param[k];
    }
  }
  return y;
}

void JointProblem::unpack(CVec const &y, Sequence &f, AffineMotionField &mf) const
{
  Index const n = image.size();
  Index const m = coarse.size();
  if (static_cast<Index>(y.size()) != n + 6 * m) { throw ShapeError("unpack: length mismatch"); }
  f = Sequence(image, CVec(y.begin(), y.begin() + n));
  if (mf.coarse != coarse) { mf = AffineMotionField(coarse, mf.scale); }
  for (std::size_t k = 0; k < 6; ++k) {
    for (Index i = 0; i < m; ++i) {
      mf.p[k].data[static_cast<std::size_t>(i)] = scaling.param[k] * y[static_cast<std::size_t>(n + static_cast<Index>(k) * m + i)].real();
    }
  }
  for (std::size_t k : {std::size_t{0}, std::size_t{3}}) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
      mf.p[k].data[i] += mf.p[k + 1].data[i] * offset_x[i] + mf.p[k + 2].data[i] * offset_y[i];
    }
  }
}

auto jpdal(CVec const &b, Mask const &mask, Sequence const &f_init, WindowSpec const &window, RunConfig const &cfg,
           std::optional<AffineMotionField> motion_init) -> JpdalResult
{
  cfg.validate();
  if (f_init.shape != mask.shape) { throw ShapeError("jpdal: initial image and mask differ in shape"); }
  JpdalResult out;
  out.f = f_init;
  auto const coarse = coarse_shape(f_init.shape, window);
  if (motion_init) {
    if (motion_init->coarse != coarse) { throw ShapeError("jpdal: initial motion is on the wrong grid"); }
    out.motion = *motion_init;
    out.motion.scale = window.scale;
  } else {
    out.motion = AffineMotionField(coarse, window.scale);
  }
  auto base = pdal::Params::from(cfg);
  std::vector<CVec> z;
  double sigma = cfg.sigma0;
  int done = 0;
  int const cycle = std::max(1, cfg.refresh_interval);
  while (done < cfg.max_iters) {
    auto const jp = assemble_joint(b, mask, shift_sequence(out.f), window, cfg);
    auto p = base;
    p.max_iters = std::min(cycle, cfg.max_iters - done);
    p.sigma0 = sigma;
    auto res = pdal::solve(jp.problem, jp.pack(out.f, out.motion), std::move(z), p);
    for (auto row : res.trace.rows) {
      row.iter += done;
      out.trace.rows.push_back(row);
    }
    done += static_cast<int>(res.trace.rows.size());
    jp.unpack(res.y, out.f, out.motion);
    z = std::move(res.z);
    sigma = res.sigma;
    ++out.refreshes;
    if (res.reason == pdal::StopReason::Converged) {
      out.reason = pdal::StopReason::Converged;
      break;
    }
  }
  return out;
}

auto evaluate_motion(AffineMotionField const &field, Index nx, Index ny) -> DenseMotionField
{
  Index const f = Index{1} << field.scale;
  if (field.coarse.nx * f != nx || field.coarse.ny * f != ny) { throw ShapeError("evaluate_motion: grid mismatch"); }
  Shape3 const s{nx, ny, field.coarse.nt};
  DenseMotionField d{RealVolume(s), RealVolume(s)};
  double const half = 0.5 * static_cast<double>(f - 1);
  for (Index t = 0; t < s.nt; ++t) {
    for (Index y = 0; y < ny; ++y) {
      Index const q = y / f;
      double const dy = static_cast<double>(y) - (static_cast<double>(f * q) + half);
      for (Index x = 0; x < nx; ++x) {
        Index const p = x / f;
        double const dx = static_cast<double>(x) - (static_cast<double>(f * p) + half);
        auto at = [&](std::size_t k) { return field.p[k](p, q, t); };
        d.u(x, y, t) = at(0) + at(1) * dx + at(2) * dy;
        d.v(x, y, t) = at(3) + at(4) * dx + at(5) * dy;
      }
    }
  }
  return d;
}

namespace {

void smooth(RealVolume &v, std::vector<double> const &k)
{
  auto const [nx, ny, nt] = v.shape;
  Index const r = static_cast<Index>(k.size() / 2);
  RealVolume tmp(v.shape);
  for (Index t = 0; t < nt; ++t) {
    for (Index y = 0; y < ny; ++y) {
      for (Index x = 0; x < nx; ++x) {
        double s = 0.0;
        for (Index i = -r; i <= r; ++i) {
          s += k[static_cast<std::size_t>(i + r)] * v(std::clamp(x + i, Index{0}, nx - 1), y, t);
        }
        tmp(x, y, t) = s;
      }
    }
    for (Index y = 0; y < ny; ++y) {
      for (Index x = 0; x < nx; ++x) {
        double s = 0.0;
        for (Index i = -r; i <= r; ++i) {
          s += k[static_cast<std::size_t>(i + r)] * tmp(x, std::clamp(y + i, Index{0}, ny - 1), t);
        }
        v(x, y, t) = s;
      }
    }
  }
}

} // namespace

auto densify_motion(AffineMotionField const &field, Index nx, Index ny, int degree) -> DenseMotionField
{
  if (degree < 0) { throw DomainError("densify_motion: negative spline degree"); }
  for (auto const &v : field.p) {
    for (double x : v.data) {
      if (!std::isfinite(x)) { throw DomainError("densify_motion: non-finite motion parameter"); }
    }
  }
  auto d = evaluate_motion(field, nx, ny);
  std::vector<double> k;
  Index const r = (degree + 1) / 2;
  for (Index i = -r; i <= r; ++i) {
    k.push_back(bspline(degree, static_cast<double>(i)));
  }
  double const sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto &w : k) {
    w /= sum;
  }
  smooth(d.u, k);
  smooth(d.v, k);
  return d;
}

auto upsample_motion(AffineMotionField const &field, int scale) -> AffineMotionField
{
  if (scale < 0 || scale > field.scale) { throw DomainError("upsample_motion: target scale must be in [0, source scale]"); }
  Index const ratio = Index{1} << (field.scale - scale);
  Index const fc = Index{1} << field.scale;
  Index const ff = Index{1} << scale;
  Shape3 const fine{field.coarse.nx * ratio, field.coarse.ny * ratio, field.coarse.nt};
  AffineMotionField out(fine, scale);
  for (Index t = 0; t < fine.nt; ++t) {
    for (Index qy = 0; qy < fine.ny; ++qy) {
      Index const py = qy / ratio;
      double const dy = (static_cast<double>(ff * qy) + 0.5 * static_cast<double>(ff - 1)) -
                        (static_cast<double>(fc * py) + 0.5 * static_cast<double>(fc - 1));
      for (Index qx = 0; qx < fine.nx; ++qx) {
        Index const px = qx / ratio;
        double const dx = (static_cast<double>(ff * qx) + 0.5 * static_cast<double>(ff - 1)) -
                          (static_cast<double>(fc * px) + 0.5 * static_cast<double>(fc - 1));
        auto at = [&](std::size_t k) { return field.p[k](px, py, t); };
        out.p[0](qx, qy, t) = at(0) + at(1) * dx + at(2) * dy;
        out.p[1](qx, qy, t) = at(1);
        out.p[2](qx, qy, t) = at(2);
        out.p[3](qx, qy, t) = at(3) + at(4) * dx + at(5) * dy;
        out.p[4](qx, qy, t) = at(4);
        out.p[5](qx, qy, t) = at(5);
      }
    }
  }
  return out;
}

auto max_displacement(DenseMotionField const &d) -> double
{
  double m = 0.0;
  for (std::size_t i = 0; i < d.u.data.size(); ++i) {
    m = std::max(m, std::hypot(d.u.data[i], d.v.data[i]));
  }
  return m;
}

} // namespace dynamo::oflow
