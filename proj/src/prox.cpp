#include "dynamo/prox.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <memory>

namespace dynamo::prox {

auto soft_threshold(CVec const &p, double t) -> CVec
{
  CVec out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double const m = std::abs(p[i]);
    out[i] = m > t ? p[i] * ((m - t) / m) : cx{};
  }
  return out;
}

auto project_linf_ball(CVec const &p, double radius) -> CVec
{
  CVec out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double const m = std::abs(p[i]);
    out[i] = m > radius ? p[i] * (radius / m) : p[i];
  }
  return out;
}

auto prox_datafit_conj(CVec const &z, double s, CVec const &b) -> CVec
{
  if (z.size() != b.size()) { throw ShapeError("prox_datafit_conj: length mismatch"); }
  CVec out(z.size());
  double const inv = 1.0 / (1.0 + s);
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = (z[i] - s * b[i]) * inv;
  }
  return out;
}

namespace {

using Matrix = Eigen::Matrix<cx, Eigen::Dynamic, Eigen::Dynamic>;

auto singular_values_and_vectors(CVec const &m, Index rows, Index cols)
{
  if (static_cast<Index>(m.size()) != rows * cols) { throw ShapeError("svt: matrix size mismatch"); }
  Eigen::Map<Matrix const> a(m.data(), rows, cols);
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) { throw Error("svt: SVD failed"); }
  return svd;
}

} // namespace

auto svt(CVec const &m, Index rows, Index cols, double t) -> CVec
{
  auto const svd = singular_values_and_vectors(m, rows, cols);
  auto sv = svd.singularValues();
  for (Index i = 0; i < sv.size(); ++i) {
    sv[i] = std::max(sv[i] - t, 0.0);
  }
  Matrix const r = svd.matrixU() * sv.cast<cx>().asDiagonal() * svd.matrixV().adjoint();
  CVec out(m.size());
  Eigen::Map<Matrix>(out.data(), rows, cols) = r;
  return out;
}

auto nuclear_norm(CVec const &m, Index rows, Index cols) -> double
{
  return singular_values_and_vectors(m, rows, cols).singularValues().sum();
}

auto l1_norm(CVec const &x) -> double
{
  double s = 0.0;
  for (auto const &v : x) {
    s += std::abs(v);
  }
  return s;
}

auto conj_prox(ProxFn const &g, double s, CVec const &p) -> CVec
{
  CVec scaled(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    scaled[i] = p[i] / s;
  }
  auto const q = g.eval(scaled, 1.0 / s);
  CVec out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = p[i] - s * q[i];
  }
  return out;
}

auto l1(double weight) -> ProxFn
{
  return {"l1", [weight](CVec const &p, double s) { return soft_threshold(p, s * weight); },
          [weight](CVec const &x) { return weight * l1_norm(x); }};
}

auto nuclear(double weight, Index rows, Index cols) -> ProxFn
{
  return {"nuclear", [=](CVec const &p, double s) { return svt(p, rows, cols, s * weight); },
          [=](CVec const &x) { return weight * nuclear_norm(x, rows, cols); }};
}

auto half_sq_dist(CVec b) -> ProxFn
{
  auto shared = std::make_shared<CVec const>(std::move(b));
  return {"half_sq_dist",
          [shared](CVec const &p, double s) {
            auto const &bb = *shared;
            CVec out(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
              out[i] = (p[i] + s * bb[i]) / (1.0 + s);
            }
            return out;
          },
          [shared](CVec const &x) {
            double r = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
              r += std::norm(x[i] - (*shared)[i]);
            }
            return 0.5 * r;
          }};
}

auto half_sq_norm(double weight) -> ProxFn
{
  return {"half_sq_norm",
          [weight](CVec const &p, double s) {
            CVec out(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
              out[i] = p[i] / (1.0 + s * weight);
            }
            return out;
          },
          [weight](CVec const &x) {
            double r = 0.0;
            for (auto const &v : x) {
              r += std::norm(v);
            }
            return 0.5 * weight * r;
          }};
}

auto linf_indicator(double radius) -> ProxFn
{
  return {"linf_indicator", [radius](CVec const &p, double) { return project_linf_ball(p, radius); },
          [radius](CVec const &x) {
            return norm_inf(x) <= radius * (1.0 + 1e-12) ? 0.0 : std::numeric_limits<double>::infinity();
          }};
}

auto zero_fn() -> ProxFn
{
  return {"zero", [](CVec const &p, double) { return p; }, [](CVec const &) { return 0.0; }};
}

} // namespace dynamo::prox
