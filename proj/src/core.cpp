#include "dynamo/core.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dynamo {

auto to_string(Shape3 const &s) -> std::string
{
  return std::to_string(s.nx) + "x" + std::to_string(s.ny) + "x" + std::to_string(s.nt);
}

auto dot(CVec const &a, CVec const &b) -> cx
{
  if (a.size() != b.size()) { throw ShapeError("dot: length mismatch"); }
  cx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * std::conj(b[i]);
  }
  return s;
}

auto norm2(CVec const &a) -> double
{
  double s = 0.0;
  for (auto const &v : a) {
    s += std::norm(v);
  }
  return std::sqrt(s);
}

auto norm_inf(CVec const &a) -> double
{
  double m = 0.0;
  for (auto const &v : a) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

void axpy(cx alpha, CVec const &x, CVec &y)
{
  if (x.size() != y.size()) { throw ShapeError("axpy: length mismatch"); }
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] += alpha * x[i];
  }
}

auto sub(CVec const &a, CVec const &b) -> CVec
{
  if (a.size() != b.size()) { throw ShapeError("sub: length mismatch"); }
  CVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a[i] - b[i];
  }
  return out;
}

namespace {
int g_threads = 0;
}

void set_threads(int n)
{
  g_threads = std::max(0, n);
#ifdef _OPENMP
  if (g_threads > 0) { omp_set_num_threads(g_threads); }
#endif
}

auto threads() -> int
{
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

} // namespace dynamo
