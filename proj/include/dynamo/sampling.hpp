#pragma once

#include "dynamo/core.hpp"

namespace dynamo::sampling {

// Masks are stored centred: the DC sample sits at (nx/2, ny/2).

inline constexpr double kGoldenAngleDeg = 111.246117975;

/// Pseudo-radial golden-angle mask: ray m = t * rays + k has angle
/// m * 111.246117975 deg (mod 180). Each ray through the centre is
/// rasterised out to radius max(nx,ny)/2 with one nearest-sample point per
/// grid line crossed along its dominant axis.
auto golden_radial_mask(Index nx, Index ny, Index nt, Index rays_per_frame) -> Mask;

/// Cartesian mask with `low_freq_lines` fully sampled phase-encode rows around
/// DC and uniformly random extra samples until each frame holds
/// round(nx * ny / reduction) samples.
auto cartesian_vd_mask(Index nx, Index ny, Index nt, double reduction, Index low_freq_lines, std::uint64_t seed)
  -> Mask;

/// nx * ny * nt / (number of sampled points).
auto reduction_factor(Mask const &mask) -> double;

auto count(Mask const &mask) -> Index;
auto count_frame(Mask const &mask, Index t) -> Index;

} // namespace dynamo::sampling
