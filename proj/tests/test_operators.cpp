#include "support.hpp"

#include "dynamo/fft.hpp"
#include "dynamo/sampling.hpp"

using namespace dynamo;
using testing::max_abs_diff;
using testing::random_sequence;

namespace {

auto random_mask(Shape3 s, std::uint64_t seed, double p = 0.4) -> Mask
{
  auto const r = testing::random_real(s.size(), seed, 0.0, 1.0);
  Mask m(s);
  for (std::size_t i = 0; i < r.size(); ++i) {
    m.data[i] = r[i] < p ? 1 : 0;
  }
  return m;
}

// Direct O(N^2) unitary DFT of one frame, centred: frequency index k maps to
// k - n/2 and the image origin sits at pixel 0.
auto naive_dft(Sequence const &f, Index t) -> CVec
{
  auto const [nx, ny, nt] = f.shape;
  CVec out(static_cast<std::size_t>(nx * ny));
  double const tp = 2.0 * std::acos(-1.0);
  for (Index ky = 0; ky < ny; ++ky) {
    for (Index kx = 0; kx < nx; ++kx) {
      cx acc{};
      for (Index y = 0; y < ny; ++y) {
        for (Index x = 0; x < nx; ++x) {
          double const ph = -tp * (static_cast<double>((kx - nx / 2) * x) / nx + static_cast<double>((ky - ny / 2) * y) / ny);
          acc += f(x, y, t) * cx{std::cos(ph), std::sin(ph)};
        }
      }
      out[static_cast<std::size_t>(kx + nx * ky)] = acc / std::sqrt(static_cast<double>(nx * ny));
    }
  }
  return out;
}

} // namespace

TEST_CASE("fft frame transform is unitary and invertible")
{
  auto f = random_sequence(Shape3{6, 4, 1}, 1);
  auto g = f;
  fft::frame2d(g.frame(0), 6, 4, true);
  CHECK(std::abs(norm2(g.data) - norm2(f.data)) < 1e-12);
  fft::frame2d(g.frame(0), 6, 4, false);
  CHECK(max_abs_diff(g.data, f.data) < 1e-13);
}

TEST_CASE("full mask measurement equals a direct DFT")
{
  Shape3 const s{8, 6, 2};
  auto const f = random_sequence(s, 2);
  auto const a = measure_op(Mask(s, std::uint8_t{1}));
  auto const b = a.apply(f.data);
  for (Index t = 0; t < 2; ++t) {
    auto const ref = naive_dft(f, t);
    CVec got(b.begin() + t * 48, b.begin() + (t + 1) * 48);
    CHECK(max_abs_diff(got, ref) < 1e-12);
  }
  CHECK(std::abs(norm2(b) - norm2(f.data)) < 1e-12);
  CHECK(max_abs_diff(a.adjoint(b), f.data) < 1e-12);
}

TEST_CASE("delta image with a DC-only mask")
{
  Shape3 const s{16, 8, 1};
  Mask m(s);
  m(8, 4, 0) = 1;
  Sequence f(s);
  f(3, 5, 0) = 1.0;
  auto const b = measure_op(m).apply(f.data);
  REQUIRE(b.size() == 1);
  CHECK(std::abs(b[0] - cx{1.0 / std::sqrt(128.0), 0.0}) < 1e-15);
}

TEST_CASE("measurement composed with its adjoint is the identity on samples")
{
  Shape3 const s{8, 8, 3};
  auto const a = measure_op(random_mask(s, 4));
  auto const z = random_vector(a.out_size(), 5);
  CHECK(max_abs_diff(a.apply(a.adjoint(z)), z) < 1e-12);
  CHECK_THROWS_AS(a.apply(CVec(3)), ShapeError);
}

TEST_CASE("gradient: constant, ramp and bound")
{
  Index const nx = 5, ny = 4;
  auto const g = grad_op(nx, ny);
  CHECK(g.norm_bound == doctest::Approx(std::sqrt(8.0)));
  CVec c(static_cast<std::size_t>(nx * ny), cx{2.5, -1});
  CHECK(norm_inf(g.apply(c)) == 0.0);
  CVec ramp(static_cast<std::size_t>(nx * ny));
  for (Index y = 0; y < ny; ++y) {
    for (Index x = 0; x < nx; ++x) {
      ramp[static_cast<std::size_t>(x + nx * y)] = static_cast<double>(x);
    }
  }
  auto const d = g.apply(ramp);
  for (Index y = 0; y < ny; ++y) {
    for (Index x = 0; x < nx; ++x) {
      auto const i = static_cast<std::size_t>(x + nx * y);
      CHECK(d[i] == cx{x == nx - 1 ? 0.0 : 1.0});
      CHECK(d[i + static_cast<std::size_t>(nx * ny)] == cx{0.0});
    }
  }
  auto const g8 = grad_op(8, 8);
  CHECK(dot_test(g8, 3) < 1e-12);
  CHECK(power_norm(g8, 200) <= std::sqrt(8.0) + 1e-9);
}

TEST_CASE("temporal FFT")
{
  Shape3 const s{3, 2, 5};
  auto const op = temporal_fft_op(s.nx, s.ny, s.nt);
  Sequence st(s);
  auto const frame = random_vector(6, 8);
  for (Index t = 0; t < s.nt; ++t) {
    std::copy(frame.begin(), frame.end(), st.frame(t));
  }
  auto const y = op.apply(st.data);
  double dc = 0.0;
  for (Index i = 0; i < 6; ++i) {
    dc += std::norm(y[static_cast<std::size_t>(i)]);
  }
  CHECK(dc == doctest::Approx(norm2(st.data) * norm2(st.data)).epsilon(1e-12));
  auto const r = random_sequence(s, 9);
  CHECK(std::abs(norm2(op.apply(r.data)) - norm2(r.data)) < 1e-12);
  CHECK(dot_test(op, 1) < 1e-10);

  auto const one = temporal_fft_op(4, 4, 1);
  auto const x = random_vector(16, 10);
  CHECK(max_abs_diff(one.apply(x), x) < 1e-15);
}

TEST_CASE("casorati layout")
{
  auto const op = casorati_op(2, 2, 3);
  CHECK(op.out_shape == std::vector<Index>{4, 3});
  auto const x = random_vector(12, 1);
  auto const m = op.apply(x);
  // column-major 4 x 3: column t is frame t, x fastest
  for (Index t = 0; t < 3; ++t) {
    for (Index p = 0; p < 4; ++p) {
      CHECK(m[static_cast<std::size_t>(p + 4 * t)] == x[static_cast<std::size_t>(p + 4 * t)]);
    }
  }
  CHECK(op.adjoint(m) == x);
  CHECK(norm2(m) == doctest::Approx(norm2(x)));
}

TEST_CASE("B-spline basics")
{
  CHECK(bspline(0, 0.0) == 1.0);
  CHECK(bspline(0, 0.7) == 0.0);
  CHECK(bspline(1, 0.5) == doctest::Approx(0.5));
  CHECK(bspline(3, 0.0) == doctest::Approx(2.0 / 3.0));
  CHECK(bspline(3, 1.0) == doctest::Approx(1.0 / 6.0));
  CHECK(bspline(3, 2.0) == 0.0);
  // partition of unity on the integers
  for (int n = 0; n <= 5; ++n) {
    double s = 0.0;
    for (int k = -10; k <= 10; ++k) {
      s += bspline(n, 0.3 + k);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("window taps are symmetric about the node centre")
{
  for (int j = 0; j <= 3; ++j) {
    auto const taps = window_taps(WindowSpec{3, j});
    auto const n = taps.weight.size();
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(taps.weight[k] == doctest::Approx(taps.weight[n - 1 - k]));
      CHECK(taps.delta[k] == doctest::Approx(-taps.delta[n - 1 - k]));
      CHECK(taps.weight[k] > 0.0);
    }
    CHECK(taps.sum() == doctest::Approx(static_cast<double>(Index{1} << j)));
  }
  CHECK_THROWS_AS(window_taps(WindowSpec{-1, 0}), DomainError);
}

TEST_CASE("window average: identity at scale 0 degree 0")
{
  auto const op = window_avg_op(WindowSpec{0, 0}, 5, 4, 2);
  auto const x = random_vector(40, 2);
  CHECK(max_abs_diff(op.apply(x), x) < 1e-15);
}

TEST_CASE("window average of a constant")
{
  WindowSpec const w{3, 2};
  Index const nx = 48, ny = 48;
  auto const op = window_avg_op(w, nx, ny, 1);
  CHECK(op.out_shape == std::vector<Index>{12, 12, 1});
  CVec c(static_cast<std::size_t>(nx * ny), cx{1.5, 0.5});
  auto const out = op.apply(c);
  double const s = window_taps(w).sum();
  // nodes whose window lies fully inside the image
  for (Index q = 2; q < 10; ++q) {
    for (Index p = 2; p < 10; ++p) {
      CHECK(std::abs(out[static_cast<std::size_t>(p + 12 * q)] - cx{1.5, 0.5} * s * s) < 1e-12);
    }
  }
  CHECK_THROWS_AS(window_avg_op(w, 30, 16, 1), ShapeError);
}

TEST_CASE("window average equals a direct tap sum")
{
  WindowSpec const w{2, 1};
  Shape3 const s{8, 6, 2};
  auto const f = random_sequence(s, 12);
  auto const out = window_avg_op(w, s.nx, s.ny, s.nt).apply(f.data);
  auto const taps = window_taps(w);
  Index const cx_n = 4, cy_n = 3;
  for (Index t = 0; t < 2; ++t) {
    for (Index q = 0; q < cy_n; ++q) {
      for (Index p = 0; p < cx_n; ++p) {
        cx acc{};
        for (std::size_t a = 0; a < taps.weight.size(); ++a) {
          for (std::size_t b = 0; b < taps.weight.size(); ++b) {
            Index const x = 2 * p + taps.first + static_cast<Index>(a);
            Index const y = 2 * q + taps.first + static_cast<Index>(b);
            if (x < 0 || y < 0 || x >= s.nx || y >= s.ny) { continue; }
            acc += taps.weight[a] * taps.weight[b] * f(x, y, t);
          }
        }
        CHECK(std::abs(out[static_cast<std::size_t>(p + cx_n * (q + cy_n * t))] - acc) < 1e-12);
      }
    }
  }
}

TEST_CASE("pointwise scale")
{
  auto const x = random_vector(10, 3);
  CHECK(max_abs_diff(pointwise_scale_op(CVec(10, cx{1.0})).apply(x), x) == 0.0);
  CHECK(norm_inf(pointwise_scale_op(CVec(10)).apply(x)) == 0.0);
  auto const op = pointwise_scale_op(random_vector(10, 4));
  CHECK(dot_test(op, 5) < 1e-12);
  CHECK_THROWS_AS(op.apply(CVec(9)), ShapeError);
  CVec bad(3, cx{std::nan(""), 0.0});
  CHECK_THROWS_AS(pointwise_scale_op(bad), DomainError);
}

TEST_CASE("dot test on identity is exactly zero")
{
  CHECK(dot_test(identity_op(17), 1) == 0.0);
}

TEST_CASE("dot test catches an off-by-one adjoint")
{
  auto g = grad_op(6, 6);
  auto const good = g.backward;
  g.backward = [good](CVec const &z) {
    auto x = good(z);
    std::rotate(x.begin(), x.begin() + 1, x.end());
    return x;
  };
  CHECK(dot_test(g, 1) > 1e-3);
}

TEST_CASE("operator algebra")
{
  auto const a = pointwise_scale_op(random_vector(6, 1));
  auto const b = grad_op(3, 2);
  auto const c = compose(b, a);
  CHECK(c.in_size() == 6);
  CHECK(c.out_size() == 12);
  CHECK(c.norm_bound == doctest::Approx(a.norm_bound * b.norm_bound));
  CHECK_THROWS_AS(compose(a, b), ShapeError);

  auto const blk = on_block(b, 10, 3);
  auto const x = random_vector(10, 2);
  CHECK(max_abs_diff(blk.apply(x), b.apply(CVec(x.begin() + 3, x.begin() + 9))) == 0.0);
  CHECK_THROWS_AS(on_block(b, 8, 3), ShapeError);

  auto const row = block_row({grad_op(3, 2), scaled(grad_op(3, 2), -2.0)});
  auto const y = random_vector(12, 3);
  auto const expect = grad_op(3, 2).apply(CVec(y.begin(), y.begin() + 6));
  auto const expect2 = grad_op(3, 2).apply(CVec(y.begin() + 6, y.end()));
  auto const got = row.apply(y);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::abs(got[i] - (expect[i] - 2.0 * expect2[i])) < 1e-14);
  }
  CHECK(norm_inf(zero_op(4, 3).apply(random_vector(4, 1))) == 0.0);
}

TEST_CASE("every operator passes the dot test over 20 seeds")
{
  Shape3 const s{16, 8, 3};
  std::vector<LinearOperator> ops{
    identity_op(7),
    zero_op(5, 4),
    scaled(grad_op(4, 4), 0.3),
    measure_op(random_mask(s, 1)),
    measure_op(sampling::golden_radial_mask(16, 8, 3, 4)),
    grad_op(16, 8, 3),
    temporal_fft_op(16, 8, 3),
    casorati_op(16, 8, 3),
    pointwise_scale_op(random_vector(20, 3)),
    window_avg_op(WindowSpec{3, 2}, 16, 8, 3),
    window_avg_op(WindowSpec{1, 1}, 16, 8, 3),
    window_avg_op(WindowSpec{0, 3}, 16, 8, 3),
    compose(temporal_fft_op(16, 8, 3), casorati_op(16, 8, 3)),
    on_block(grad_op(16, 8, 3), 500, 10),
    block_row({window_avg_op(WindowSpec{3, 1}, 16, 8, 3), window_avg_op(WindowSpec{2, 1}, 16, 8, 3)}),
  };
  for (auto const &op : ops) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      INFO(op.name << " seed " << seed);
      CHECK(dot_test(op, seed) < 1e-10);
    }
  }
}

TEST_CASE("norm bounds dominate power iteration")
{
  Shape3 const s{8, 8, 2};
  for (auto const &op : {measure_op(random_mask(s, 3)), grad_op(8, 8, 2), temporal_fft_op(8, 8, 2),
                         window_avg_op(WindowSpec{3, 1}, 8, 8, 2), casorati_op(8, 8, 2)}) {
    INFO(op.name);
    CHECK(power_norm(op, 100) <= op.norm_bound * (1.0 + 1e-9));
  }
}
