#pragma once

#include "dynamo/core.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace dynamo::metrics {

struct SsimOptions {
  Index window = 7;                   // odd side length of the uniform window
  double k1 = 0.01;
  double k2 = 0.03;
  std::optional<double> dynamic_range; // L; defaults to max |reference|
  bool global = false;                 // one window covering each whole frame
};

struct MetricReport {
  std::vector<double> frame_rmse;
  std::vector<double> frame_ssim;
  double rmse = 0.0;
  double mean_ssim = 0.0;

  /// Columns frame,rmse,ssim then a summary row labelled "all".
  void write_csv(std::ostream &os) const;
};

/// Root mean square of |estimate - reference| over all voxels.
auto rmse(Sequence const &estimate, Sequence const &reference) -> double;

/// Mean SSIM over frames of the magnitude images; each frame's value is the
/// mean of the local SSIM map over every fully-inside window position.
auto ssim(Sequence const &estimate, Sequence const &reference, SsimOptions const &opt = {}) -> double;

auto evaluate(Sequence const &estimate, Sequence const &reference, SsimOptions const &opt = {}) -> MetricReport;

} // namespace dynamo::metrics
