#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynamo {

using Index = std::ptrdiff_t;
using cx = std::complex<double>;
using CVec = std::vector<cx>;
using RVec = std::vector<double>;

// Error taxonomy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : Error {
  using Error::Error;
};
struct ConfigError : UsageError {
  using UsageError::UsageError;
};
struct DataError : Error {
  using Error::Error;
};
struct IoError : DataError {
  using DataError::DataError;
};
struct BadMagic : IoError {
  using IoError::IoError;
};
struct TruncatedPayload : IoError {
  using IoError::IoError;
};
struct UnsupportedDtype : IoError {
  using IoError::IoError;
};
struct ShapeError : DataError {
  using DataError::DataError;
};
struct DomainError : DataError {
  using DataError::DataError;
};
struct SolverError : Error {
  using Error::Error;
};

struct Shape3 {
  Index nx = 0;
  Index ny = 0;
  Index nt = 0;

  constexpr auto pixels() const -> Index { return nx * ny; }
  constexpr auto size() const -> Index { return nx * ny * nt; }
  constexpr auto offset(Index x, Index y, Index t) const -> Index { return x + nx * (y + ny * t); }
  friend constexpr auto operator==(Shape3 const &, Shape3 const &) -> bool = default;
};

auto to_string(Shape3 const &s) -> std::string;

// Dense x-fastest volume. Complex image sequences, real motion components and
// boolean masks all use this layout.
template <typename T>
struct Volume {
  Shape3 shape;
  std::vector<T> data;

  Volume() = default;
  explicit Volume(Shape3 s, T fill = T{})
    : shape{s}
    , data(static_cast<std::size_t>(s.size()), fill)
  {
  }
  Volume(Shape3 s, std::vector<T> d)
    : shape{s}
    , data(std::move(d))
  {
    if (static_cast<Index>(data.size()) != s.size()) {
      throw ShapeError("volume data length does not match shape " + to_string(s));
    }
  }

  auto operator()(Index x, Index y, Index t) -> T & { return data[static_cast<std::size_t>(shape.offset(x, y, t))]; }
  auto operator()(Index x, Index y, Index t) const -> T const &
  {
    return data[static_cast<std::size_t>(shape.offset(x, y, t))];
  }
  auto frame(Index t) -> T * { return data.data() + t * shape.pixels(); }
  auto frame(Index t) const -> T const * { return data.data() + t * shape.pixels(); }
  friend auto operator==(Volume const &, Volume const &) -> bool = default;
};

using Sequence = Volume<cx>;
using RealVolume = Volume<double>;
using Mask = Volume<std::uint8_t>;

/// Displacement of each pixel of frame t relative to its temporal predecessor,
/// so that f_t(x) ~ f_{t-1}(x - d(x, t)).
struct DenseMotionField {
  RealVolume u;
  RealVolume v;

  auto shape() const -> Shape3 { return u.shape; }
};

// Vector-space helpers on flat complex storage.
auto dot(CVec const &a, CVec const &b) -> cx; // sum a_i * conj(b_i)
auto norm2(CVec const &a) -> double;
auto norm_inf(CVec const &a) -> double;
void axpy(cx alpha, CVec const &x, CVec &y);
auto sub(CVec const &a, CVec const &b) -> CVec;

// Number of worker threads used by the per-frame loops (0 = runtime default).
void set_threads(int n);
auto threads() -> int;

} // namespace dynamo
