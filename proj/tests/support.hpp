#pragma once

#include "dynamo/core.hpp"
#include "dynamo/operators.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

using namespace dynamo;

inline auto random_sequence(Shape3 s, std::uint64_t seed) -> Sequence
{
  return Sequence(s, random_vector(s.size(), seed));
}

inline auto random_real(Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) -> RVec
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RVec v(static_cast<std::size_t>(n));
  for (auto &x : v) {
    x = u(rng);
  }
  return v;
}

inline auto max_abs_diff(CVec const &a, CVec const &b) -> double
{
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(std::string const &tag)
  {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("dynamo_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  auto operator/(std::string const &name) const -> std::filesystem::path { return path / name; }
};

} // namespace testing
