#include "dynamo/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dynamo::report {

auto quantize(double magnitude, double scale) -> std::uint16_t
{
  if (!(scale > 0.0)) { return 0; }
  double const q = std::round(65535.0 * magnitude / scale);
  return static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
}

auto frame_magnitude(Sequence const &f, Index t, double scale) -> Gray16
{
  if (t < 0 || t >= f.shape.nt) { throw DomainError("frame index out of range"); }
  Gray16 img{f.shape.nx, f.shape.ny, {}};
  img.pixels.reserve(static_cast<std::size_t>(f.shape.pixels()));
  auto const *p = f.frame(t);
  for (Index i = 0; i < f.shape.pixels(); ++i) {
    img.pixels.push_back(quantize(std::abs(p[i]), scale));
  }
  return img;
}

void write_pgm16(std::filesystem::path const &path, Gray16 const &img)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) { throw IoError("cannot open " + path.string() + " for writing"); }
  os << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (auto v : img.pixels) {
    char const bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    os.write(bytes, 2);
  }
  if (!os) { throw IoError("write failed for " + path.string()); }
}

auto read_pgm16(std::filesystem::path const &path) -> Gray16
{
  std::ifstream is(path, std::ios::binary);
  if (!is) { throw IoError("cannot open " + path.string()); }
  std::string magic;
  Gray16 img;
  int maxval = 0;
  is >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 65535 || img.width <= 0 || img.height <= 0) {
    throw BadMagic(path.string() + " is not a 16-bit binary PGM");
  }
  is.get(); // single whitespace after maxval
  img.pixels.resize(static_cast<std::size_t>(img.width * img.height));
  for (auto &v : img.pixels) {
    unsigned char bytes[2];
    if (!is.read(reinterpret_cast<char *>(bytes), 2)) { throw TruncatedPayload(path.string() + " ends early"); }
    v = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
  }
  return img;
}

void write_profile_csv(std::ostream &os, Sequence const &f, Index column)
{
  if (column < 0 || column >= f.shape.nx) {
    throw DomainError("profile column " + std::to_string(column) + " outside [0, " + std::to_string(f.shape.nx) + ")");
  }
  os << 'y';
  for (Index t = 0; t < f.shape.nt; ++t) {
    os << ",t" << t;
  }
  os << '\n' << std::setprecision(10);
  for (Index y = 0; y < f.shape.ny; ++y) {
    os << y;
    for (Index t = 0; t < f.shape.nt; ++t) {
      os << ',' << std::abs(f(column, y, t));
    }
    os << '\n';
  }
}

namespace {

auto max_magnitude(Sequence const &f) -> double
{
  double m = 0.0;
  for (auto const &v : f.data) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

auto numbered(std::string const &stem, Index t) -> std::string
{
  std::ostringstream name;
  name << stem << '_' << std::setw(3) << std::setfill('0') << t << ".pgm";
  return name.str();
}

} // namespace

auto export_sequence(Sequence const &f, std::filesystem::path const &dir, ExportOptions const &opt)
  -> std::vector<std::filesystem::path>
{
  Index const column = opt.column.value_or(f.shape.nx / 2);
  if (column < 0 || column >= f.shape.nx) {
    throw DomainError("profile column " + std::to_string(column) + " outside [0, " + std::to_string(f.shape.nx) + ")");
  }
  if (opt.reference != nullptr && opt.reference->shape != f.shape) {
    throw ShapeError("reference shape " + to_string(opt.reference->shape) + " differs from " + to_string(f.shape));
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) { throw IoError("cannot create " + dir.string() + ": " + ec.message()); }
  std::vector<std::filesystem::path> written;
  double const scale = max_magnitude(f);
  for (Index t = 0; t < f.shape.nt; ++t) {
    auto const p = dir / numbered("frame", t);
    write_pgm16(p, frame_magnitude(f, t, scale));
    written.push_back(p);
  }
  auto const prof = dir / ("profile_x" + std::to_string(column) + ".csv");
  std::ofstream os(prof);
  if (!os) { throw IoError("cannot open " + prof.string()); }
  write_profile_csv(os, f, column);
  written.push_back(prof);
  if (opt.reference != nullptr) {
    Sequence diff(f.shape);
    for (std::size_t i = 0; i < diff.data.size(); ++i) {
      diff.data[i] = f.data[i] - opt.reference->data[i];
    }
    double const ref_scale = max_magnitude(*opt.reference);
    for (Index t = 0; t < f.shape.nt; ++t) {
      auto const p = dir / numbered("diff", t);
      write_pgm16(p, frame_magnitude(diff, t, ref_scale));
      written.push_back(p);
    }
  }
  return written;
}

} // namespace dynamo::report
