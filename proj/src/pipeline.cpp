#include "dynamo/pipeline.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

namespace dynamo::pipeline {

auto max_coarse_scale(Index nx, Index ny) -> int
{
  Index const m = std::min(nx, ny);
  int l = 0;
  while ((Index{2} << l) <= m) {
    ++l;
  }
  return std::max(0, l - 3);
}

auto clamp_scales(RunConfig cfg, Index nx, Index ny, Logger const &log) -> RunConfig
{
  int const jmax = max_coarse_scale(nx, ny);
  if (cfg.j_coarse > jmax) {
    if (log) {
      log("warning: j_coarse " + std::to_string(cfg.j_coarse) + " leaves a grid below 8x8 for " + std::to_string(nx) +
          "x" + std::to_string(ny) + "; using " + std::to_string(jmax));
    }
    cfg.j_coarse = jmax;
  }
  if (cfg.j_fine > cfg.j_coarse) {
    if (log) { log("warning: j_fine lowered to " + std::to_string(cfg.j_coarse)); }
    cfg.j_fine = cfg.j_coarse;
  }
  return cfg;
}

auto undersample(Sequence const &f, Mask const &mask, double noise_sigma, std::uint64_t seed) -> CVec
{
  if (f.shape != mask.shape) {
    throw ShapeError("sequence " + to_string(f.shape) + " does not match mask " + to_string(mask.shape));
  }
  if (!(noise_sigma >= 0.0)) { throw DomainError("noise_sigma must be >= 0"); }
  auto b = measure_op(mask).apply(f.data);
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise_sigma / std::sqrt(2.0));
    for (auto &v : b) {
      double const re = g(rng);
      double const im = g(rng);
      v += cx{re, im};
    }
  }
  return b;
}

auto zero_filled(CVec const &b, Mask const &mask) -> Sequence
{
  auto const a = measure_op(mask);
  if (static_cast<Index>(b.size()) != a.out_size()) {
    throw ShapeError("k-space has " + std::to_string(b.size()) + " samples but the mask selects " +
                     std::to_string(a.out_size()));
  }
  return Sequence(mask.shape, a.adjoint(b));
}

auto sweep(CVec const &b, Mask const &mask, RunConfig const &cfg_in, bool with_mc, Logger const &log) -> ReconResult
{
  cfg_in.validate();
  auto const s = mask.shape;
  auto cfg = clamp_scales(cfg_in, s.nx, s.ny, log);
  Index const fc = Index{1} << cfg.j_coarse;
  if (s.nx % fc != 0 || s.ny % fc != 0) {
    throw ShapeError("image " + to_string(s) + " is not divisible by 2^" + std::to_string(cfg.j_coarse));
  }
  ReconResult out;
  out.config = cfg;
  out.f = zero_filled(b, mask);
  auto const params = pdal::Params::from(cfg);
  std::optional<oflow::AffineMotionField> motion;
  for (int j = cfg.j_coarse; j >= cfg.j_fine; --j) {
    WindowSpec const window{cfg.spline_degree, j};
    if (motion) { motion = oflow::upsample_motion(*motion, j); }
    Round round;
    round.scale = j;
    auto jr = oflow::jpdal(b, mask, out.f, window, cfg, motion);
    round.jpdal = std::move(jr.trace);
    round.jpdal_reason = jr.reason;
    out.f = std::move(jr.f);
    motion = jr.motion;
    out.motion = oflow::densify_motion(jr.motion, s.nx, s.ny, cfg.spline_degree);
    round.max_displacement = oflow::max_displacement(out.motion);
    if (log) {
      log("scale " + std::to_string(j) + ": jpdal " + std::to_string(round.jpdal.rows.size()) + " iterations" +
          (round.jpdal_reason == pdal::StopReason::Converged ? " (converged)" : " (iteration cap)"));
    }
    if (round.max_displacement > cfg.motion_cap && log) {
      log("warning: displacement of " + std::to_string(round.max_displacement) + " px exceeds the cap of " +
          std::to_string(cfg.motion_cap) + " px at scale " + std::to_string(j));
    }
    if (with_mc) {
      auto mr = mc::mc_refine(out.f, b, mask, out.motion, cfg.lambda, params, cfg.wrap);
      round.mc = std::move(mr.trace);
      round.mc_reason = mr.reason;
      round.mc_ran = true;
      round.mc_objective = mr.objective;
      out.f = std::move(mr.f);
      if (!std::isfinite(round.mc_objective)) { throw SolverError("motion-compensated objective is not finite"); }
      if (log) {
        log("scale " + std::to_string(j) + ": mc " + std::to_string(round.mc.rows.size()) + " iterations, objective " +
            std::to_string(round.mc_objective));
      }
    }
    out.rounds.push_back(std::move(round));
  }
  out.coarse = *motion;
  return out;
}

auto mc_jpdal(CVec const &b, Mask const &mask, RunConfig const &cfg, Logger const &log) -> ReconResult
{
  return sweep(b, mask, cfg, true, log);
}

auto jpdal_only(CVec const &b, Mask const &mask, RunConfig const &cfg, Logger const &log) -> ReconResult
{
  return sweep(b, mask, cfg, false, log);
}

void write_traces(std::ostream &os, std::vector<Round> const &rounds)
{
  os << "scale,stage,iter,cost,sigma,trials,rel_change\n" << std::setprecision(17);
  auto emit = [&](int scale, char const *stage, pdal::SolveTrace const &t) {
    for (auto const &r : t.rows) {
      os << scale << ',' << stage << ',' << r.iter << ',' << r.cost << ',' << r.sigma << ',' << r.trials << ','
         << r.rel_change << '\n';
    }
  };
  for (auto const &r : rounds) {
    emit(r.scale, "jpdal", r.jpdal);
    if (r.mc_ran) { emit(r.scale, "mc", r.mc); }
  }
}

} // namespace dynamo::pipeline
