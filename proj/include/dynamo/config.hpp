#pragma once

#include "dynamo/core.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace dynamo {

enum class Prior { L1, TV, LowRank, L1TV, LowRankL1 };
enum class MotionSmoother { TV, L2 };
enum class SparsifyingTransform { TemporalFFT, Identity };

auto to_string(Prior p) -> std::string;
auto parse_prior(std::string const &name) -> Prior;

struct RunConfig {
  // Regularization weights. For combined priors eta weighs the first
  // component (l1 for l1_tv, low rank for lr_l1) and eta2 the second.
  double eta = 2e-3;
  double eta2 = 2e-3;
  double tau = 5e-4;
  double gamma = 1e-2;
  double lambda = 2e-2;
  Prior prior = Prior::L1;
  SparsifyingTransform transform = SparsifyingTransform::TemporalFFT;
  MotionSmoother motion_smoother = MotionSmoother::TV;

  int j_coarse = 5;
  int j_fine = 3;
  int spline_degree = 3;

  // Linesearch primal-dual parameters.
  double sigma0 = 1.0;
  double alpha = 0.5;
  double rho = 0.7;
  double ls_eps = 0.99;
  double stop_tol = 1e-4;
  int max_iters = 500;

  int refresh_interval = 20; // iterations between shifted-sequence refreshes
  bool wrap = true;          // pair frame 1 with frame Nt
  double motion_cap = 10.0;  // px; larger densified displacements are flagged
  std::uint64_t seed = 0;

  void validate() const;
};

auto load_config(std::filesystem::path const &path) -> RunConfig;
auto parse_config(std::string const &json_text) -> RunConfig;
auto to_json(RunConfig const &cfg) -> std::string;

} // namespace dynamo
