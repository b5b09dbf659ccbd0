#pragma once

#include "dynamo/config.hpp"
#include "dynamo/mc.hpp"
#include "dynamo/oflow.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dynamo::pipeline {

struct Round {
  int scale = 0;
  pdal::SolveTrace jpdal;
  pdal::StopReason jpdal_reason = pdal::StopReason::MaxIterations;
  pdal::SolveTrace mc;
  pdal::StopReason mc_reason = pdal::StopReason::MaxIterations;
  bool mc_ran = false;
  double mc_objective = 0.0;
  double max_displacement = 0.0;
};

struct ReconResult {
  Sequence f;
  DenseMotionField motion;         // densified at the finest scale visited
  oflow::AffineMotionField coarse; // parameters at the finest scale visited
  std::vector<Round> rounds;       // coarse to fine
  RunConfig config;                // as run, after clamping
};

using Logger = std::function<void(std::string const &)>;

/// Coarsest usable scale for an image: leaves at least an 8 x 8 coarse grid.
auto max_coarse_scale(Index nx, Index ny) -> int;

/// Returns cfg with j_coarse (and j_fine if needed) clamped for the image
/// size; `log` receives a warning when anything changes.
auto clamp_scales(RunConfig cfg, Index nx, Index ny, Logger const &log = {}) -> RunConfig;

/// b = A(f) + n, with n complex white Gaussian noise of standard deviation
/// noise_sigma (sigma / sqrt(2) per component), drawn from `seed`.
auto undersample(Sequence const &f, Mask const &mask, double noise_sigma, std::uint64_t seed) -> CVec;

/// Zero-filled reconstruction A*(b).
auto zero_filled(CVec const &b, Mask const &mask) -> Sequence;

/// Scale sweep from j_coarse to j_fine: joint estimation at each scale,
/// followed by motion-compensated refinement when `with_mc` is set.
auto sweep(CVec const &b, Mask const &mask, RunConfig const &cfg, bool with_mc, Logger const &log = {})
  -> ReconResult;

auto mc_jpdal(CVec const &b, Mask const &mask, RunConfig const &cfg, Logger const &log = {}) -> ReconResult;
auto jpdal_only(CVec const &b, Mask const &mask, RunConfig const &cfg, Logger const &log = {}) -> ReconResult;

/// All round traces in one CSV with columns scale,stage,iter,cost,sigma,trials,rel_change.
void write_traces(std::ostream &os, std::vector<Round> const &rounds);

} // namespace dynamo::pipeline
