#pragma once

#include "dynamo/core.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace dynamo::io {

// On-disk container: 8-byte magic "DYNAMO1\0", u32 version, u32 dtype code,
// u32 rank, rank x u64 extents, then the little-endian payload with the first
// extent varying fastest.
inline constexpr std::array<char, 8> kMagic{'D', 'Y', 'N', 'A', 'M', 'O', '1', '\0'};
inline constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint32_t {
  Complex64 = 0, // interleaved float32 (re, im)
  Float32 = 1,
  UInt8 = 2,
};

auto element_size(DType d) -> std::size_t;
auto header_size(std::size_t rank) -> std::size_t;

struct Tensor {
  DType dtype = DType::Float32;
  std::vector<std::uint64_t> dims;
  std::vector<std::byte> payload;

  auto count() const -> std::uint64_t;
  friend auto operator==(Tensor const &, Tensor const &) -> bool = default;
};

auto load_tensor(std::filesystem::path const &path) -> Tensor;
void save_tensor(std::filesystem::path const &path, Tensor const &t);
auto encode(Tensor const &t) -> std::vector<std::byte>;
auto decode(std::vector<std::byte> const &bytes) -> Tensor;

// Typed conversions. Complex sequences are narrowed to complex64 on write.
auto from_sequence(Sequence const &f) -> Tensor;
auto to_sequence(Tensor const &t) -> Sequence;
auto from_mask(Mask const &m) -> Tensor;
auto to_mask(Tensor const &t) -> Mask;
auto from_vector(CVec const &b) -> Tensor; // rank-1 complex64
auto to_vector(Tensor const &t) -> CVec;
// Motion is a rank-4 float32 tensor nx x ny x nt x 2 (u block, then v block).
auto from_motion(DenseMotionField const &d) -> Tensor;
auto to_motion(Tensor const &t) -> DenseMotionField;

} // namespace dynamo::io
