#include "dynamo/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little, "payload encoding assumes a little-endian host");

namespace dynamo::io {

namespace {

template <typename T>
void put(std::vector<std::byte> &out, T value)
{
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  out.insert(out.end(), raw.begin(), raw.end());
}

template <typename T>
auto get(std::vector<std::byte> const &in, std::size_t &pos) -> T
{
  if (pos + sizeof(T) > in.size()) { throw TruncatedPayload("tensor header is truncated"); }
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

auto shape3(Tensor const &t, DType want, std::size_t rank) -> Shape3
{
  if (t.dtype != want) { throw UnsupportedDtype("unexpected tensor dtype for this role"); }
  if (t.dims.size() != rank) { throw ShapeError("unexpected tensor rank " + std::to_string(t.dims.size())); }
  Shape3 s{static_cast<Index>(t.dims[0]), rank > 1 ? static_cast<Index>(t.dims[1]) : 1,
           rank > 2 ? static_cast<Index>(t.dims[2]) : 1};
  return s;
}

} // namespace

auto element_size(DType d) -> std::size_t
{
  switch (d) {
  case DType::Complex64: return 8;
  case DType::Float32: return 4;
  case DType::UInt8: return 1;
  }
  throw UnsupportedDtype("unsupported dtype code " + std::to_string(static_cast<std::uint32_t>(d)));
}

auto header_size(std::size_t rank) -> std::size_t { return kMagic.size() + 3 * sizeof(std::uint32_t) + rank * 8; }

auto Tensor::count() const -> std::uint64_t
{
  std::uint64_t n = 1;
  for (auto d : dims) {
    n *= d;
  }
  return n;
}

auto encode(Tensor const &t) -> std::vector<std::byte>
{
  if (t.payload.size() != t.count() * element_size(t.dtype)) {
    throw ShapeError("tensor payload does not match its extents");
  }
  std::vector<std::byte> out;
  out.reserve(header_size(t.dims.size()) + t.payload.size());
  for (char c : kMagic) {
    out.push_back(static_cast<std::byte>(c));
  }
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(t.dtype));
  put(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) {
    put(out, d);
  }
  out.insert(out.end(), t.payload.begin(), t.payload.end());
  return out;
}

auto decode(std::vector<std::byte> const &bytes) -> Tensor
{
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw BadMagic("not a DYNAMO1 tensor (bad magic)");
  }
  std::size_t pos = kMagic.size();
  auto const version = get<std::uint32_t>(bytes, pos);
  if (version != kVersion) { throw IoError("unsupported tensor version " + std::to_string(version)); }
  auto const code = get<std::uint32_t>(bytes, pos);
  if (code > 2) { throw UnsupportedDtype("unsupported dtype code " + std::to_string(code)); }
  Tensor t;
  t.dtype = static_cast<DType>(code);
  auto const rank = get<std::uint32_t>(bytes, pos);
  if (rank > 16) { throw IoError("implausible tensor rank " + std::to_string(rank)); }
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(get<std::uint64_t>(bytes, pos));
  }
  auto const need = t.count() * element_size(t.dtype);
  auto const have = bytes.size() - pos;
  if (have < need) { throw TruncatedPayload("tensor payload truncated: need " + std::to_string(need) + " bytes, have " + std::to_string(have)); }
  if (have > need) { throw IoError("tensor file has " + std::to_string(have - need) + " trailing bytes"); }
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return t;
}

auto load_tensor(std::filesystem::path const &path) -> Tensor
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError("cannot open " + path.string()); }
  in.seekg(0, std::ios::end);
  auto const n = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(n);
  in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(n));
  if (!in) { throw IoError("failed reading " + path.string()); }
  return decode(bytes);
}

void save_tensor(std::filesystem::path const &path, Tensor const &t)
{
  auto const bytes = encode(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw IoError("cannot open " + path.string() + " for writing"); }
  out.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) { throw IoError("failed writing " + path.string()); }
}

auto from_sequence(Sequence const &f) -> Tensor
{
  Tensor t{DType::Complex64,
           {static_cast<std::uint64_t>(f.shape.nx), static_cast<std::uint64_t>(f.shape.ny),
            static_cast<std::uint64_t>(f.shape.nt)},
           {}};
  t.payload.resize(f.data.size() * 8);
  auto *p = t.payload.data();
  for (auto const &v : f.data) {
    float const re = static_cast<float>(v.real());
    float const im = static_cast<float>(v.imag());
    std::memcpy(p, &re, 4);
    std::memcpy(p + 4, &im, 4);
    p += 8;
  }
  return t;
}

auto to_sequence(Tensor const &t) -> Sequence
{
  auto s = shape3(t, DType::Complex64, t.dims.size() == 2 ? 2 : 3);
  Sequence f(s);
  auto const *p = t.payload.data();
  for (auto &v : f.data) {
    float re, im;
    std::memcpy(&re, p, 4);
    std::memcpy(&im, p + 4, 4);
    v = cx{re, im};
    p += 8;
  }
  return f;
}

auto from_mask(Mask const &m) -> Tensor
{
  Tensor t{DType::UInt8,
           {static_cast<std::uint64_t>(m.shape.nx), static_cast<std::uint64_t>(m.shape.ny),
            static_cast<std::uint64_t>(m.shape.nt)},
           {}};
  t.payload.resize(m.data.size());
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    t.payload[i] = static_cast<std::byte>(m.data[i] ? 1 : 0);
  }
  return t;
}

auto to_mask(Tensor const &t) -> Mask
{
  Mask m(shape3(t, DType::UInt8, 3));
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = t.payload[i] != std::byte{0} ? 1 : 0;
  }
  return m;
}

auto from_vector(CVec const &b) -> Tensor
{
  Sequence tmp(Shape3{static_cast<Index>(b.size()), 1, 1}, b);
  auto t = from_sequence(tmp);
  t.dims = {static_cast<std::uint64_t>(b.size())};
  return t;
}

auto to_vector(Tensor const &t) -> CVec
{
  if (t.dtype != DType::Complex64 || t.dims.size() != 1) { throw ShapeError("expected a rank-1 complex64 tensor"); }
  Tensor tmp = t;
  tmp.dims = {t.dims[0], 1, 1};
  return to_sequence(tmp).data;
}

auto from_motion(DenseMotionField const &d) -> Tensor
{
  auto const s = d.shape();
  Tensor t{DType::Float32,
           {static_cast<std::uint64_t>(s.nx), static_cast<std::uint64_t>(s.ny), static_cast<std::uint64_t>(s.nt), 2},
           {}};
  t.payload.resize(static_cast<std::size_t>(s.size()) * 2 * 4);
  auto *p = t.payload.data();
  for (auto const *comp : {&d.u, &d.v}) {
    for (double v : comp->data) {
      float const f = static_cast<float>(v);
      std::memcpy(p, &f, 4);
      p += 4;
    }
  }
  return t;
}

auto to_motion(Tensor const &t) -> DenseMotionField
{
  if (t.dtype != DType::Float32 || t.dims.size() != 4 || t.dims[3] != 2) {
    throw ShapeError("expected a float32 nx x ny x nt x 2 motion tensor");
  }
  Shape3 s{static_cast<Index>(t.dims[0]), static_cast<Index>(t.dims[1]), static_cast<Index>(t.dims[2])};
  DenseMotionField d{RealVolume(s), RealVolume(s)};
  auto const *p = t.payload.data();
  for (auto *comp : {&d.u, &d.v}) {
    for (double &v : comp->data) {
      float f;
      std::memcpy(&f, p, 4);
      v = f;
      p += 4;
    }
  }
  return d;
}

} // namespace dynamo::io
