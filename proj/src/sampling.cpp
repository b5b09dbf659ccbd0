#include "dynamo/sampling.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace dynamo::sampling {

auto golden_radial_mask(Index nx, Index ny, Index nt, Index rays_per_frame) -> Mask
{
  if (nx <= 0 || ny <= 0 || nt <= 0) { throw DomainError("golden_radial_mask: extents must be positive"); }
  if (rays_per_frame < 1) { throw DomainError("golden_radial_mask: rays_per_frame must be >= 1"); }
  Mask mask(Shape3{nx, ny, nt});
  double const cx0 = static_cast<double>(nx / 2);
  double const cy0 = static_cast<double>(ny / 2);
  double const rmax = 0.5 * static_cast<double>(std::max(nx, ny));
  for (Index t = 0; t < nt; ++t) {
    for (Index k = 0; k < rays_per_frame; ++k) {
      double const m = static_cast<double>(t * rays_per_frame + k);
      double const deg = std::fmod(m * kGoldenAngleDeg, 180.0);
      double const th = deg * std::numbers::pi / 180.0;
      double const c = std::cos(th);
      double const s = std::sin(th);
      // One sample per grid line crossed along the dominant axis.
      double const step = 1.0 / std::max(std::abs(c), std::abs(s));
      auto const half = static_cast<Index>(std::floor(rmax / step + 1e-9));
      for (Index i = -half; i <= half; ++i) {
        double const r = step * static_cast<double>(i);
        auto const x = static_cast<Index>(std::llround(cx0 + r * c));
        auto const y = static_cast<Index>(std::llround(cy0 + r * s));
        if (x >= 0 && x < nx && y >= 0 && y < ny) { mask(x, y, t) = 1; }
      }
    }
    mask(nx / 2, ny / 2, t) = 1;
  }
  return mask;
}

auto cartesian_vd_mask(Index nx, Index ny, Index nt, double reduction, Index low_freq_lines, std::uint64_t seed)
  -> Mask
{
  if (nx <= 0 || ny <= 0 || nt <= 0) { throw DomainError("cartesian_vd_mask: extents must be positive"); }
  if (!(reduction > 1.0)) { throw DomainError("cartesian_vd_mask: reduction must be > 1"); }
  if (low_freq_lines < 0 || low_freq_lines >= ny) { throw DomainError("cartesian_vd_mask: low_freq_lines must be in [0, ny)"); }
  auto const budget = static_cast<Index>(std::llround(static_cast<double>(nx * ny) / reduction));
  Index const low = low_freq_lines * nx;
  if (low > budget || budget < 1) {
    throw DomainError("cartesian_vd_mask: low-frequency region (" + std::to_string(low) + " samples) exceeds the budget of " +
                      std::to_string(budget));
  }
  Mask mask(Shape3{nx, ny, nt});
  Index const y0 = ny / 2 - low_freq_lines / 2;
  std::mt19937_64 rng(seed);
  for (Index t = 0; t < nt; ++t) {
    auto *frame = mask.frame(t);
    for (Index y = y0; y < y0 + low_freq_lines; ++y) {
      for (Index x = 0; x < nx; ++x) {
        frame[x + nx * y] = 1;
      }
    }
    Index have = low;
    if (!frame[nx / 2 + nx * (ny / 2)]) {
      frame[nx / 2 + nx * (ny / 2)] = 1;
      ++have;
    }
    std::vector<Index> pool;
    for (Index i = 0; i < nx * ny; ++i) {
      if (!frame[i]) { pool.push_back(i); }
    }
    // Partial Fisher-Yates: the first (budget - have) entries are the draw.
    for (Index k = 0; have < budget; ++k, ++have) {
      std::uniform_int_distribution<Index> pick(k, static_cast<Index>(pool.size()) - 1);
      std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
      frame[pool[static_cast<std::size_t>(k)]] = 1;
    }
  }
  return mask;
}

auto count_frame(Mask const &mask, Index t) -> Index
{
  Index n = 0;
  auto const *f = mask.frame(t);
  for (Index i = 0; i < mask.shape.pixels(); ++i) {
    n += f[i] ? 1 : 0;
  }
  return n;
}

auto count(Mask const &mask) -> Index
{
  Index n = 0;
  for (auto v : mask.data) {
    n += v ? 1 : 0;
  }
  return n;
}

auto reduction_factor(Mask const &mask) -> double
{
  auto const n = count(mask);
  if (n == 0) { throw DomainError("reduction_factor: mask has no samples"); }
  return static_cast<double>(mask.shape.size()) / static_cast<double>(n);
}

} // namespace dynamo::sampling
