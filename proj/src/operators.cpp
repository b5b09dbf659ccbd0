#include "dynamo/operators.hpp"

#include "dynamo/fft.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

namespace dynamo {

namespace {

auto product(std::vector<Index> const &s) -> Index
{
  return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<>{});
}

void check(Index got, Index want, std::string const &who)
{
  if (got != want) {
    throw ShapeError(who + ": expected length " + std::to_string(want) + ", got " + std::to_string(got));
  }
}

auto binomial(int n, int k) -> double
{
  double r = 1.0;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

} // namespace

auto LinearOperator::in_size() const -> Index { return product(in_shape); }
auto LinearOperator::out_size() const -> Index { return product(out_shape); }

auto LinearOperator::apply(CVec const &x) const -> CVec
{
  check(static_cast<Index>(x.size()), in_size(), name + " forward");
  return forward(x);
}

auto LinearOperator::adjoint(CVec const &z) const -> CVec
{
  check(static_cast<Index>(z.size()), out_size(), name + " adjoint");
  return backward(z);
}

auto identity_op(Index n) -> LinearOperator
{
  return {"identity", {n}, {n}, [](CVec const &x) { return x; }, [](CVec const &z) { return z; }, 1.0, {}};
}

auto zero_op(Index in, Index out) -> LinearOperator
{
  return {"zero",
          {in},
          {out},
          [out](CVec const &) { return CVec(static_cast<std::size_t>(out)); },
          [in](CVec const &) { return CVec(static_cast<std::size_t>(in)); },
          0.0,
          {}};
}

auto scaled(LinearOperator op, double s) -> LinearOperator
{
  auto f = op.forward;
  auto b = op.backward;
  op.name = std::to_string(s) + "*" + op.name;
  op.forward = [f, s](CVec const &x) {
    auto y = f(x);
    for (auto &v : y) {
      v *= s;
    }
    return y;
  };
  op.backward = [b, s](CVec const &z) {
    auto y = b(z);
    for (auto &v : y) {
      v *= s;
    }
    return y;
  };
  op.norm_bound *= std::abs(s);
  return op;
}

auto compose(LinearOperator outer, LinearOperator inner) -> LinearOperator
{
  check(outer.in_size(), inner.out_size(), "compose(" + outer.name + ", " + inner.name + ")");
  LinearOperator op;
  op.name = outer.name + "*" + inner.name;
  op.in_shape = inner.in_shape;
  op.out_shape = outer.out_shape;
  op.norm_bound = outer.norm_bound * inner.norm_bound;
  op.domain = inner.domain;
  op.forward = [o = outer.forward, i = inner.forward](CVec const &x) { return o(i(x)); };
  op.backward = [o = outer.backward, i = inner.backward](CVec const &z) { return i(o(z)); };
  return op;
}

auto on_block(LinearOperator op, Index total, Index offset) -> LinearOperator
{
  Index const n = op.in_size();
  if (offset < 0 || offset + n > total) { throw ShapeError("on_block: block exceeds vector"); }
  LinearOperator out;
  out.name = op.name + "@" + std::to_string(offset);
  out.in_shape = {total};
  out.out_shape = op.out_shape;
  out.norm_bound = op.norm_bound;
  if (op.domain) {
    out.domain = [d = op.domain, offset, n](CVec &x) {
      CVec part(x.begin() + offset, x.begin() + offset + n);
      d(part);
      std::copy(part.begin(), part.end(), x.begin() + offset);
    };
  }
  out.forward = [f = op.forward, offset, n](CVec const &x) {
    return f(CVec(x.begin() + offset, x.begin() + offset + n));
  };
  out.backward = [b = op.backward, total, offset](CVec const &z) {
    CVec x(static_cast<std::size_t>(total));
    auto part = b(z);
    std::copy(part.begin(), part.end(), x.begin() + offset);
    return x;
  };
  return out;
}

auto block_row(std::vector<LinearOperator> parts) -> LinearOperator
{
  if (parts.empty()) { throw ShapeError("block_row: no parts"); }
  LinearOperator op;
  op.name = "row[";
  Index total = 0;
  std::vector<Index> offsets;
  double n2 = 0.0;
  bool any_domain = false;
  for (auto const &p : parts) {
    check(p.out_size(), parts.front().out_size(), "block_row output");
    offsets.push_back(total);
    total += p.in_size();
    n2 += p.norm_bound * p.norm_bound;
    op.name += p.name + ",";
    any_domain = any_domain || static_cast<bool>(p.domain);
  }
  op.name += "]";
  op.in_shape = {total};
  op.out_shape = parts.front().out_shape;
  op.norm_bound = std::sqrt(n2);
  if (any_domain) {
    op.domain = [parts, offsets](CVec &x) {
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!parts[i].domain) { continue; }
        auto const n = parts[i].in_size();
        CVec part(x.begin() + offsets[i], x.begin() + offsets[i] + n);
        parts[i].domain(part);
        std::copy(part.begin(), part.end(), x.begin() + offsets[i]);
      }
    };
  }
  op.forward = [parts, offsets](CVec const &x) {
    CVec y(static_cast<std::size_t>(parts.front().out_size()));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      auto const n = parts[i].in_size();
      auto yi = parts[i].forward(CVec(x.begin() + offsets[i], x.begin() + offsets[i] + n));
      for (std::size_t k = 0; k < y.size(); ++k) {
        y[k] += yi[k];
      }
    }
    return y;
  };
  op.backward = [parts, offsets, total](CVec const &z) {
    CVec x(static_cast<std::size_t>(total));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      auto xi = parts[i].backward(z);
      std::copy(xi.begin(), xi.end(), x.begin() + offsets[i]);
    }
    return x;
  };
  return op;
}

auto measure_op(Mask const &mask) -> LinearOperator
{
  auto const s = mask.shape;
  if (s.size() == 0) { throw ShapeError("measure_op: empty mask"); }
  // Gather table: for each frame, the unshifted FFT indices of sampled points.
  std::vector<std::vector<Index>> taps(static_cast<std::size_t>(s.nt));
  Index nb = 0;
  for (Index t = 0; t < s.nt; ++t) {
    for (Index my = 0; my < s.ny; ++my) {
      for (Index mx = 0; mx < s.nx; ++mx) {
        if (!mask(mx, my, t)) { continue; }
        Index const kx = (mx - s.nx / 2 + s.nx) % s.nx;
        Index const ky = (my - s.ny / 2 + s.ny) % s.ny;
        taps[static_cast<std::size_t>(t)].push_back(kx + s.nx * ky);
      }
    }
    nb += static_cast<Index>(taps[static_cast<std::size_t>(t)].size());
  }
  std::vector<Index> starts(static_cast<std::size_t>(s.nt) + 1, 0);
  for (Index t = 0; t < s.nt; ++t) {
    starts[static_cast<std::size_t>(t) + 1] = starts[static_cast<std::size_t>(t)] + static_cast<Index>(taps[static_cast<std::size_t>(t)].size());
  }

  LinearOperator op;
  op.name = "A";
  op.in_shape = {s.nx, s.ny, s.nt};
  op.out_shape = {nb};
  op.norm_bound = 1.0;
  op.forward = [s, taps, starts, nb](CVec const &x) {
    CVec b(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < s.nt; ++t) {
      CVec frame(x.begin() + t * s.pixels(), x.begin() + (t + 1) * s.pixels());
      fft::frame2d(frame.data(), s.nx, s.ny, true);
      auto const &tt = taps[static_cast<std::size_t>(t)];
      auto *dst = b.data() + starts[static_cast<std::size_t>(t)];
      for (std::size_t i = 0; i < tt.size(); ++i) {
        dst[i] = frame[static_cast<std::size_t>(tt[i])];
      }
    }
    return b;
  };
  op.backward = [s, taps, starts](CVec const &b) {
    CVec x(static_cast<std::size_t>(s.size()));
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < s.nt; ++t) {
      auto *frame = x.data() + t * s.pixels();
      auto const &tt = taps[static_cast<std::size_t>(t)];
      auto const *src = b.data() + starts[static_cast<std::size_t>(t)];
      for (std::size_t i = 0; i < tt.size(); ++i) {
        frame[tt[i]] = src[i];
      }
      fft::frame2d(frame, s.nx, s.ny, false);
    }
    return x;
  };
  return op;
}

auto grad_op(Index nx, Index ny, Index nt) -> LinearOperator
{
  Index const np = nx * ny;
  LinearOperator op;
  op.name = "grad";
  op.in_shape = {nx, ny, nt};
  op.out_shape = {nx, ny, 2, nt};
  op.norm_bound = std::sqrt(8.0);
  op.forward = [nx, ny, nt, np](CVec const &x) {
    CVec g(static_cast<std::size_t>(2 * np * nt));
    for (Index t = 0; t < nt; ++t) {
      auto const *f = x.data() + t * np;
      auto *gx = g.data() + 2 * t * np;
      auto *gy = gx + np;
      for (Index y = 0; y < ny; ++y) {
        for (Index xx = 0; xx < nx; ++xx) {
          Index const i = xx + nx * y;
          gx[i] = xx + 1 < nx ? f[i + 1] - f[i] : cx{};
          gy[i] = y + 1 < ny ? f[i + nx] - f[i] : cx{};
        }
      }
    }
    return g;
  };
  // Negative divergence, the exact transpose of the forward differences.
  op.backward = [nx, ny, nt, np](CVec const &g) {
    CVec x(static_cast<std::size_t>(np * nt));
    for (Index t = 0; t < nt; ++t) {
      auto *f = x.data() + t * np;
      auto const *gx = g.data() + 2 * t * np;
      auto const *gy = gx + np;
      for (Index y = 0; y < ny; ++y) {
        for (Index xx = 0; xx < nx; ++xx) {
          Index const i = xx + nx * y;
          if (xx + 1 < nx) {
            f[i] -= gx[i];
            f[i + 1] += gx[i];
          }
          if (y + 1 < ny) {
            f[i] -= gy[i];
            f[i + nx] += gy[i];
          }
        }
      }
    }
    return x;
  };
  return op;
}

auto temporal_fft_op(Index nx, Index ny, Index nt) -> LinearOperator
{
  if (nt < 1) { throw ShapeError("temporal_fft_op: nt must be >= 1"); }
  LinearOperator op;
  op.name = "Ft";
  op.in_shape = {nx, ny, nt};
  op.out_shape = {nx, ny, nt};
  op.norm_bound = 1.0;
  op.forward = [nx, ny, nt](CVec const &x) {
    CVec y = x;
    fft::along_t(y.data(), nx, ny, nt, true);
    return y;
  };
  op.backward = [nx, ny, nt](CVec const &z) {
    CVec y = z;
    fft::along_t(y.data(), nx, ny, nt, false);
    return y;
  };
  return op;
}

auto casorati_op(Index nx, Index ny, Index nt) -> LinearOperator
{
  // x-fastest storage already is the column-major (pixels x frames) matrix.
  return {"casorati", {nx, ny, nt}, {nx * ny, nt}, [](CVec const &x) { return x; }, [](CVec const &z) { return z; },
          1.0, {}};
}

auto pointwise_scale_op(CVec coefficients) -> LinearOperator
{
  for (auto const &c : coefficients) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) { throw DomainError("pointwise_scale_op: non-finite coefficient"); }
  }
  auto const n = static_cast<Index>(coefficients.size());
  double const bound = norm_inf(coefficients);
  auto shared = std::make_shared<CVec const>(std::move(coefficients));
  LinearOperator op;
  op.name = "diag";
  op.in_shape = {n};
  op.out_shape = {n};
  op.norm_bound = bound;
  op.forward = [shared](CVec const &x) {
    auto const &c = *shared;
    CVec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = c[i] * x[i];
    }
    return y;
  };
  op.backward = [shared](CVec const &z) {
    auto const &c = *shared;
    CVec y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      y[i] = std::conj(c[i]) * z[i];
    }
    return y;
  };
  return op;
}

// ---------------------------------------------------------------------------

auto bspline(int n, double x) -> double
{
  x = std::abs(x);
  double const half = 0.5 * (n + 1);
  if (x >= half) { return 0.0; }
  if (n == 0) { return x < 0.5 ? 1.0 : 0.5; }
  // Truncated-power form: (1/n!) sum_k (-1)^k C(n+1,k) (x + (n+1)/2 - k)_+^n
  double s = 0.0;
  double fact = 1.0;
  for (int i = 2; i <= n; ++i) {
    fact *= i;
  }
  for (int k = 0; k <= n + 1; ++k) {
    double const a = x + half - k;
    if (a <= 0.0) { break; }
    s += ((k % 2) ? -1.0 : 1.0) * binomial(n + 1, k) * std::pow(a, n);
  }
  return s / fact;
}

auto WindowTaps::sum() const -> double { return std::accumulate(weight.begin(), weight.end(), 0.0); }

auto WindowTaps::centre(Index node, Index factor) const -> double
{
  return static_cast<double>(factor * node) + 0.5 * static_cast<double>(factor - 1);
}

auto window_taps(WindowSpec const &w) -> WindowTaps
{
  if (w.degree < 0 || w.scale < 0) { throw DomainError("window_taps: negative degree or scale"); }
  double const f = static_cast<double>(w.factor());
  double const c = 0.5 * (f - 1.0);
  double const reach = 0.5 * (w.degree + 1) * f;
  WindowTaps taps;
  taps.first = static_cast<Index>(std::floor(c - reach));
  for (Index o = taps.first; static_cast<double>(o) <= c + reach; ++o) {
    double const d = static_cast<double>(o) - c;
    taps.weight.push_back(bspline(w.degree, d / f));
    taps.delta.push_back(d);
  }
  // Trim zero taps at both ends.
  while (!taps.weight.empty() && taps.weight.front() == 0.0) {
    taps.weight.erase(taps.weight.begin());
    taps.delta.erase(taps.delta.begin());
    ++taps.first;
  }
  while (!taps.weight.empty() && taps.weight.back() == 0.0) {
    taps.weight.pop_back();
    taps.delta.pop_back();
  }
  return taps;
}

void window_sum(cx const *in, Index nx, Index ny, Index factor, Index first, std::vector<double> const &wx,
                std::vector<double> const &wy, cx *out)
{
  Index const cxn = nx / factor;
  Index const cyn = ny / factor;
  Index const nk = static_cast<Index>(wx.size());
  // Pass 1: along x, keep full y resolution.
  CVec tmp(static_cast<std::size_t>(cxn * ny));
  for (Index y = 0; y < ny; ++y) {
    for (Index p = 0; p < cxn; ++p) {
      cx s{};
      Index const base = factor * p + first;
      for (Index k = 0; k < nk; ++k) {
        Index const x = base + k;
        if (x >= 0 && x < nx) { s += wx[static_cast<std::size_t>(k)] * in[x + nx * y]; }
      }
      tmp[static_cast<std::size_t>(p + cxn * y)] = s;
    }
  }
  // Pass 2: along y.
  Index const mk = static_cast<Index>(wy.size());
  for (Index q = 0; q < cyn; ++q) {
    Index const base = factor * q + first;
    for (Index p = 0; p < cxn; ++p) {
      cx s{};
      for (Index k = 0; k < mk; ++k) {
        Index const y = base + k;
        if (y >= 0 && y < ny) { s += wy[static_cast<std::size_t>(k)] * tmp[static_cast<std::size_t>(p + cxn * y)]; }
      }
      out[p + cxn * q] = s;
    }
  }
}

void window_scatter(cx const *in, Index nx, Index ny, Index factor, Index first, std::vector<double> const &wx,
                    std::vector<double> const &wy, cx *out)
{
  Index const cxn = nx / factor;
  Index const cyn = ny / factor;
  CVec tmp(static_cast<std::size_t>(cxn * ny));
  Index const mk = static_cast<Index>(wy.size());
  for (Index q = 0; q < cyn; ++q) {
    Index const base = factor * q + first;
    for (Index p = 0; p < cxn; ++p) {
      cx const v = in[p + cxn * q];
      for (Index k = 0; k < mk; ++k) {
        Index const y = base + k;
        if (y >= 0 && y < ny) { tmp[static_cast<std::size_t>(p + cxn * y)] += wy[static_cast<std::size_t>(k)] * v; }
      }
    }
  }
  Index const nk = static_cast<Index>(wx.size());
  for (Index i = 0; i < nx * ny; ++i) {
    out[i] = cx{};
  }
  for (Index y = 0; y < ny; ++y) {
    for (Index p = 0; p < cxn; ++p) {
      cx const v = tmp[static_cast<std::size_t>(p + cxn * y)];
      Index const base = factor * p + first;
      for (Index k = 0; k < nk; ++k) {
        Index const x = base + k;
        if (x >= 0 && x < nx) { out[x + nx * y] += wx[static_cast<std::size_t>(k)] * v; }
      }
    }
  }
}

auto window_avg_op(WindowSpec const &window, Index nx, Index ny, Index nt) -> LinearOperator
{
  Index const f = window.factor();
  if (nx % f != 0 || ny % f != 0) {
    throw ShapeError("window_avg_op: " + std::to_string(nx) + "x" + std::to_string(ny) + " not divisible by 2^" +
                     std::to_string(window.scale));
  }
  auto const taps = window_taps(window);
  Index const cnx = nx / f;
  Index const cny = ny / f;
  // Per axis ||W||^2 <= ||W||_1 ||W||_inf = (max column sum) * (tap sum); the
  // 2D operator is the tensor product of two such axes.
  double col = 0.0;
  for (Index r = 0; r < f; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < taps.weight.size(); ++k) {
      if (((taps.first + static_cast<Index>(k)) % f + f) % f == r) { s += taps.weight[k]; }
    }
    col = std::max(col, s);
  }
  LinearOperator op;
  op.name = "W" + std::to_string(window.scale);
  op.in_shape = {nx, ny, nt};
  op.out_shape = {cnx, cny, nt};
  op.norm_bound = taps.sum() * col;
  op.forward = [=](CVec const &x) {
    CVec y(static_cast<std::size_t>(cnx * cny * nt));
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < nt; ++t) {
      window_sum(x.data() + t * nx * ny, nx, ny, f, taps.first, taps.weight, taps.weight, y.data() + t * cnx * cny);
    }
    return y;
  };
  op.backward = [=](CVec const &z) {
    CVec x(static_cast<std::size_t>(nx * ny * nt));
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < nt; ++t) {
      window_scatter(z.data() + t * cnx * cny, nx, ny, f, taps.first, taps.weight, taps.weight, x.data() + t * nx * ny);
    }
    return x;
  };
  return op;
}

// ---------------------------------------------------------------------------

auto random_vector(Index n, std::uint64_t seed) -> CVec
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CVec v(static_cast<std::size_t>(n));
  for (auto &e : v) {
    double const re = g(rng);
    double const im = g(rng);
    e = cx{re, im};
  }
  return v;
}

auto dot_test(LinearOperator const &op, std::uint64_t seed) -> double
{
  auto x = random_vector(op.in_size(), seed);
  auto const z = random_vector(op.out_size(), seed ^ 0x9e3779b97f4a7c15ULL);
  if (op.domain) { op.domain(x); }
  auto const ax = op.apply(x);
  auto const atz = op.adjoint(z);
  cx const lhs = dot(ax, z);
  cx const rhs = dot(x, atz);
  double const denom = norm2(ax) * norm2(z) + 1e-300;
  if (op.real_domain()) { return std::abs(lhs.real() - rhs.real()) / denom; }
  return std::abs(lhs - rhs) / denom;
}

auto power_norm(LinearOperator const &op, int iterations, std::uint64_t seed) -> double
{
  auto x = random_vector(op.in_size(), seed);
  if (op.domain) { op.domain(x); }
  double n = norm2(x);
  double est = 0.0;
  for (int i = 0; i < iterations; ++i) {
    for (auto &v : x) {
      v /= n;
    }
    x = op.adjoint(op.apply(x));
    if (op.domain) { op.domain(x); }
    n = norm2(x);
    est = std::sqrt(n);
    if (n == 0.0) { break; }
  }
  return est;
}

} // namespace dynamo
