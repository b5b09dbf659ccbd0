#include "support.hpp"

#include "dynamo/mc.hpp"
#include "dynamo/metrics.hpp"
#include "dynamo/phantom.hpp"
#include "dynamo/prox.hpp"
#include "dynamo/sampling.hpp"

using namespace dynamo;
using namespace dynamo::mc;
using testing::max_abs_diff;
using testing::random_sequence;

namespace {

auto uniform_motion(Shape3 s, double u, double v) -> DenseMotionField
{
  DenseMotionField d{RealVolume(s), RealVolume(s)};
  std::fill(d.u.data.begin(), d.u.data.end(), u);
  std::fill(d.v.data.begin(), d.v.data.end(), v);
  return d;
}

auto random_motion(Shape3 s, std::uint64_t seed, double amp) -> DenseMotionField
{
  DenseMotionField d{RealVolume(s), RealVolume(s)};
  d.u.data = testing::random_real(s.size(), seed, -amp, amp);
  d.v.data = testing::random_real(s.size(), seed + 1, -amp, amp);
  return d;
}

// Circular temporal differences f_{t-1} - f_t, written out directly.
auto tdiff(CVec const &f, Index np, Index nt) -> CVec
{
  CVec out(f.size());
  for (Index t = 0; t < nt; ++t) {
    Index const s = t == 0 ? nt - 1 : t - 1;
    for (Index i = 0; i < np; ++i) {
      out[static_cast<std::size_t>(t * np + i)] = f[static_cast<std::size_t>(s * np + i)] - f[static_cast<std::size_t>(t * np + i)];
    }
  }
  return out;
}

auto tdiff_adj(CVec const &z, Index np, Index nt) -> CVec
{
  CVec out(z.size());
  for (Index t = 0; t < nt; ++t) {
    Index const s = t == 0 ? nt - 1 : t - 1;
    for (Index i = 0; i < np; ++i) {
      out[static_cast<std::size_t>(s * np + i)] += z[static_cast<std::size_t>(t * np + i)];
      out[static_cast<std::size_t>(t * np + i)] -= z[static_cast<std::size_t>(t * np + i)];
    }
  }
  return out;
}

} // namespace

TEST_CASE("zero motion gives identity warps")
{
  Shape3 const s{8, 6, 3};
  auto const warps = build_warp(uniform_motion(s, 0.0, 0.0));
  REQUIRE(warps.size() == 3);
  CHECK(warps[0].source == 2);
  CHECK(warps[1].source == 0);
  auto const f = random_vector(48, 1);
  for (auto const &w : warps) {
    CHECK(warp_op(w).apply(f) == f);
  }
}

TEST_CASE("integer shift moves a delta by one pixel")
{
  Shape3 const s{8, 8, 2};
  auto const warps = build_warp(uniform_motion(s, 1.0, 0.0));
  CVec delta(64);
  delta[3 + 8 * 4] = 1.0;
  auto const out = warp_op(warps[1]).apply(delta);
  for (Index i = 0; i < 64; ++i) {
    CHECK(out[static_cast<std::size_t>(i)] == cx{i == 4 + 8 * 4 ? 1.0 : 0.0});
  }
}

TEST_CASE("half-pixel shift of a ramp is exact")
{
  Shape3 const s{10, 6, 2};
  auto const warps = build_warp(uniform_motion(s, 0.5, 0.0));
  CVec ramp(60);
  for (Index y = 0; y < 6; ++y) {
    for (Index x = 0; x < 10; ++x) {
      ramp[static_cast<std::size_t>(x + 10 * y)] = 2.0 * static_cast<double>(x) + 0.3 * static_cast<double>(y);
    }
  }
  auto const out = warp_op(warps[1]).apply(ramp);
  for (Index y = 0; y < 6; ++y) {
    for (Index x = 1; x < 10; ++x) {
      double const expect = 2.0 * (static_cast<double>(x) - 0.5) + 0.3 * static_cast<double>(y);
      CHECK(std::abs(out[static_cast<std::size_t>(x + 10 * y)] - expect) < 1e-12);
    }
  }
}

TEST_CASE("bilinear weights are a partition of unity in bounds")
{
  Shape3 const s{16, 16, 3};
  auto const warps = build_warp(random_motion(s, 3, 2.5));
  CVec ones(256, cx{1.0});
  for (auto const &w : warps) {
    auto const out = warp_op(w).apply(ones);
    for (Index y = 3; y < 13; ++y) {
      for (Index x = 3; x < 13; ++x) {
        CHECK(std::abs(out[static_cast<std::size_t>(x + 16 * y)] - 1.0) < 1e-14);
      }
    }
    for (auto const &wt : w.weight) {
      double const sum = wt[0] + wt[1] + wt[2] + wt[3];
      CHECK(sum <= 1.0 + 1e-14);
      CHECK(sum >= 0.0);
    }
  }
  // everything displaced outside: zero
  auto const far = build_warp(uniform_motion(s, 40.0, 0.0));
  CHECK(norm_inf(warp_op(far[1]).apply(ones)) == 0.0);
}

TEST_CASE("warp and difference operators pass the adjoint test")
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Shape3 const s{12, 10, 4};
    auto const warps = build_warp(random_motion(s, seed, 3.0));
    for (auto const &w : warps) {
      CHECK(dot_test(warp_op(w), seed) < 1e-12);
    }
    for (bool wrap : {true, false}) {
      auto const d = difference_op(warps, s, wrap);
      CHECK(dot_test(d, seed) < 1e-12);
      CHECK(power_norm(d) <= d.norm_bound);
    }
  }
}

TEST_CASE("difference operator without wrap leaves the first row zero")
{
  Shape3 const s{6, 6, 3};
  auto const d = difference_op(build_warp(random_motion(s, 1, 1.0)), s, false);
  auto const y = d.apply(random_vector(s.size(), 2));
  for (Index i = 0; i < 36; ++i) {
    CHECK(y[static_cast<std::size_t>(i)] == cx{});
  }
  auto const dz = difference_op(build_warp(uniform_motion(s, 0, 0)), s, true);
  auto const f = random_vector(s.size(), 3);
  CHECK(max_abs_diff(dz.apply(f), tdiff(f, 36, 3)) == 0.0);
}

TEST_CASE("warp and difference reject bad input")
{
  Shape3 const s{6, 6, 3};
  auto m = uniform_motion(s, 0, 0);
  m.u.data[4] = std::nan("");
  CHECK_THROWS_AS(build_warp(m), DomainError);
  auto const w = build_warp(uniform_motion(s, 0, 0));
  CHECK_THROWS_AS(difference_op(w, Shape3{6, 6, 2}, true), ShapeError);
  CHECK_THROWS_AS(difference_op(w, Shape3{5, 6, 3}, true), ShapeError);
}

TEST_CASE("lambda zero is the data-only solution")
{
  auto const f = random_sequence({16, 16, 3}, 4);
  Mask const full(f.shape, std::uint8_t{1});
  auto const a = measure_op(full);
  auto const b = a.apply(f.data);
  auto const r = mc_refine(random_sequence(f.shape, 5), b, full, uniform_motion(f.shape, 0.3, 0.1), 0.0, pdal::Params{});
  CHECK(max_abs_diff(r.f.data, a.adjoint(b)) < 1e-12);
  CHECK(r.reason == pdal::StopReason::Converged);

  // undersampled: data consistency on sampled entries, init elsewhere
  auto const mask = sampling::golden_radial_mask(16, 16, 3, 4);
  auto const am = measure_op(mask);
  auto const bm = am.apply(f.data);
  auto const init = random_sequence(f.shape, 6);
  auto const r2 = mc_refine(init, bm, mask, uniform_motion(f.shape, 0, 0), 0.0, pdal::Params{});
  CHECK(max_abs_diff(am.apply(r2.f.data), bm) < 1e-12);
  CHECK(r2.objective < 1e-20);
}

TEST_CASE("mc_refine rejects bad input")
{
  Shape3 const s{8, 8, 2};
  Mask const full(s, std::uint8_t{1});
  auto const f = random_sequence(s, 1);
  auto const b = measure_op(full).apply(f.data);
  auto const m = uniform_motion(s, 0, 0);
  CHECK_THROWS_AS(mc_refine(f, b, full, m, -1.0, pdal::Params{}), ConfigError);
  CHECK_THROWS_AS(mc_refine(f, b, full, m, std::nan(""), pdal::Params{}), ConfigError);
  CHECK_THROWS_AS(mc_refine(f, CVec(3), full, m, 0.1, pdal::Params{}), ShapeError);
  CHECK_THROWS_AS(mc_refine(f, b, full, uniform_motion({8, 8, 3}, 0, 0), 0.1, pdal::Params{}), ShapeError);
}

TEST_CASE("zero motion reduces to a temporal-difference problem")
{
  auto const ph = phantom::generate_phantom(phantom::preset("translate", 16, 16, 4), 0);
  auto const mask = sampling::golden_radial_mask(16, 16, 4, 3);
  auto const a = measure_op(mask);
  auto const b = a.apply(ph.f.data);
  double const lambda = 0.05;
  pdal::Params p;
  p.stop_tol = 1e-300;
  p.max_iters = 20000;
  auto const r = mc_refine(Sequence(ph.f.shape, a.adjoint(b)), b, mask, uniform_motion(ph.f.shape, 0, 0), lambda, p);

  // fixed-step primal-dual on min 1/2|Af - b|^2 + lambda |Tf|_1 with the data
  // term handled by a closed-form prox (A has orthonormal rows)
  Index const np = 256, nt = 4;
  double const tau = 0.4, sig = 0.4; // tau sig |T|^2 <= 0.64
  CVec x = a.adjoint(b), xbar = x, z(x.size());
  for (int k = 0; k < 100000; ++k) {
    auto const tz = tdiff(xbar, np, nt);
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] += sig * tz[i];
    }
    z = prox::project_linf_ball(z, lambda);
    auto const ad = tdiff_adj(z, np, nt);
    CVec v(x.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = x[i] - tau * ad[i];
    }
    // prox of tau/2 |A x - b|^2: sampled entries (in k-space) shrink toward b
    auto const av = a.apply(v);
    CVec corr(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
      corr[i] = (av[i] + tau * b[i]) / (1.0 + tau) - av[i];
    }
    auto const dc = a.adjoint(corr);
    CVec xn(v);
    for (std::size_t i = 0; i < xn.size(); ++i) {
      xn[i] += dc[i];
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      xbar[i] = 2.0 * xn[i] - x[i];
    }
    x = std::move(xn);
  }
  auto objective = [&](CVec const &f) {
    double const res = norm2(sub(a.apply(f), b));
    return 0.5 * res * res + lambda * prox::l1_norm(tdiff(f, np, nt));
  };
  double const ref = objective(x);
  REQUIRE(ref > 1e-6);
  CHECK(std::abs(r.objective - ref) <= 1e-5 * ref);
  CHECK(std::abs(objective(r.f.data) - r.objective) <= 1e-12 * ref);
}

TEST_CASE("ground-truth motion improves on the initial estimate")
{
  auto const ph = phantom::generate_phantom(phantom::preset("translate", 64, 64, 16), 0);
  auto const mask = sampling::golden_radial_mask(64, 64, 16, 9);
  auto const a = measure_op(mask);
  auto const b = a.apply(ph.f.data);
  Sequence const init(ph.f.shape, a.adjoint(b));
  auto const r = mc_refine(init, b, mask, ph.motion, RunConfig{}.lambda, pdal::Params::from(RunConfig{}));
  CHECK(metrics::rmse(r.f, ph.f) < metrics::rmse(init, ph.f));
}

TEST_CASE("mc_refine does not increase the objective")
{
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Shape3 const s{16, 16, 4};
    auto const truth = random_sequence(s, seed);
    auto const mask = sampling::golden_radial_mask(16, 16, 4, 5);
    auto const a = measure_op(mask);
    auto const b = a.apply(truth.data);
    auto const motion = random_motion(s, seed + 10, 1.5);
    auto const d = difference_op(build_warp(motion), s, true);
    auto const init = random_sequence(s, seed + 20);
    double const lambda = 0.05;
    pdal::Params p;
    p.max_iters = 200;
    auto const r = mc_refine(init, b, mask, motion, lambda, p);
    CHECK(r.objective <= mc_objective(init, b, a, d, lambda) * (1.0 + 1e-4));
    CHECK(std::isfinite(r.objective));
  }
}
