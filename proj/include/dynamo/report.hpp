#pragma once

#include "dynamo/core.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

namespace dynamo::report {

/// 16-bit grayscale image, row-major with x fastest.
struct Gray16 {
  Index width = 0;
  Index height = 0;
  std::vector<std::uint16_t> pixels;
};

/// round(65535 * |v| / scale), clamped; scale <= 0 maps everything to 0.
auto quantize(double magnitude, double scale) -> std::uint16_t;

auto frame_magnitude(Sequence const &f, Index t, double scale) -> Gray16;

/// Binary PGM (P5) with maxval 65535, big-endian samples.
void write_pgm16(std::filesystem::path const &path, Gray16 const &img);
auto read_pgm16(std::filesystem::path const &path) -> Gray16;

/// y-t profile of |f| at column x: one row per y, one column per frame.
void write_profile_csv(std::ostream &os, Sequence const &f, Index column);

struct ExportOptions {
  std::optional<Index> column; // defaults to nx / 2
  Sequence const *reference = nullptr;
};

/// Writes frame_NNN.pgm, profile_x<col>.csv and, with a reference,
/// diff_NNN.pgm of |f - reference| scaled to the reference maximum.
/// Returns the written paths.
auto export_sequence(Sequence const &f, std::filesystem::path const &dir, ExportOptions const &opt = {})
  -> std::vector<std::filesystem::path>;

} // namespace dynamo::report
