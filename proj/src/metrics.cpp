#include "dynamo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace dynamo::metrics {

namespace {

void same_shape(Sequence const &a, Sequence const &b)
{
  if (a.shape != b.shape) { throw ShapeError("metrics: shape mismatch " + to_string(a.shape) + " vs " + to_string(b.shape)); }
}

auto frame_rmse(Sequence const &a, Sequence const &b, Index t) -> double
{
  double s = 0.0;
  auto const *pa = a.frame(t);
  auto const *pb = b.frame(t);
  for (Index i = 0; i < a.shape.pixels(); ++i) {
    s += std::norm(pa[i] - pb[i]);
  }
  return std::sqrt(s / static_cast<double>(a.shape.pixels()));
}

auto frame_ssim(Sequence const &est, Sequence const &ref, Index t, SsimOptions const &opt, double L) -> double
{
  Index const nx = ref.shape.nx;
  Index const ny = ref.shape.ny;
  std::vector<double> a(static_cast<std::size_t>(nx * ny)), b(a.size());
  auto const *pa = est.frame(t);
  auto const *pb = ref.frame(t);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::abs(pa[i]);
    b[i] = std::abs(pb[i]);
  }
  Index const wx = opt.global ? nx : std::min(opt.window, nx);
  Index const wy = opt.global ? ny : std::min(opt.window, ny);
  double const c1 = (opt.k1 * L) * (opt.k1 * L);
  double const c2 = (opt.k2 * L) * (opt.k2 * L);
  double const np = static_cast<double>(wx * wy);
  double total = 0.0;
  Index windows = 0;
  for (Index y0 = 0; y0 + wy <= ny; ++y0) {
    for (Index x0 = 0; x0 + wx <= nx; ++x0) {
      double ma = 0.0, mb = 0.0;
      for (Index y = y0; y < y0 + wy; ++y) {
        for (Index x = x0; x < x0 + wx; ++x) {
          ma += a[static_cast<std::size_t>(x + nx * y)];
          mb += b[static_cast<std::size_t>(x + nx * y)];
        }
      }
      ma /= np;
      mb /= np;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (Index y = y0; y < y0 + wy; ++y) {
        for (Index x = x0; x < x0 + wx; ++x) {
          double const da = a[static_cast<std::size_t>(x + nx * y)] - ma;
          double const db = b[static_cast<std::size_t>(x + nx * y)] - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      }
      va /= np;
      vb /= np;
      cov /= np;
      double const num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
      double const den = (ma * ma + mb * mb + c1) * (va + vb + c2);
      total += den > 0.0 ? num / den : 1.0;
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

auto range_of(Sequence const &ref, SsimOptions const &opt) -> double
{
  if (opt.dynamic_range) { return *opt.dynamic_range; }
  double L = 0.0;
  for (auto const &v : ref.data) {
    L = std::max(L, std::abs(v));
  }
  return L;
}

} // namespace

auto rmse(Sequence const &estimate, Sequence const &reference) -> double
{
  same_shape(estimate, reference);
  double s = 0.0;
  for (std::size_t i = 0; i < estimate.data.size(); ++i) {
    s += std::norm(estimate.data[i] - reference.data[i]);
  }
  return std::sqrt(s / static_cast<double>(estimate.data.size()));
}

auto ssim(Sequence const &estimate, Sequence const &reference, SsimOptions const &opt) -> double
{
  return evaluate(estimate, reference, opt).mean_ssim;
}

auto evaluate(Sequence const &estimate, Sequence const &reference, SsimOptions const &opt) -> MetricReport
{
  same_shape(estimate, reference);
  if (!opt.global && (opt.window < 1 || opt.window % 2 == 0)) { throw DomainError("ssim: window size must be odd"); }
  double const L = range_of(reference, opt);
  MetricReport r;
  double sum = 0.0;
  for (Index t = 0; t < reference.shape.nt; ++t) {
    r.frame_rmse.push_back(frame_rmse(estimate, reference, t));
    r.frame_ssim.push_back(frame_ssim(estimate, reference, t, opt, L));
    sum += r.frame_ssim.back();
  }
  r.rmse = rmse(estimate, reference);
  r.mean_ssim = sum / static_cast<double>(reference.shape.nt);
  return r;
}

void MetricReport::write_csv(std::ostream &os) const
{
  os << "frame,rmse,ssim\n" << std::setprecision(10);
  for (std::size_t t = 0; t < frame_rmse.size(); ++t) {
    os << t << ',' << frame_rmse[t] << ',' << frame_ssim[t] << '\n';
  }
  os << "all," << rmse << ',' << mean_ssim << '\n';
}

} // namespace dynamo::metrics
