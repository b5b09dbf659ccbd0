#include "dynamo/phantom.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dynamo::phantom {

namespace {

auto rotate(Vec2 const &v, double a) -> Vec2
{
  double const c = std::cos(a);
  double const s = std::sin(a);
  return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

auto shift_at(MotionLaw const &m, double t) -> Vec2
{
  Vec2 s{m.velocity[0] * t, m.velocity[1] * t};
  if (m.period > 0.0) {
    double const ph = std::sin(2.0 * std::numbers::pi * t / m.period);
    s[0] += m.amplitude[0] * ph;
    s[1] += m.amplitude[1] * ph;
  }
  return s;
}

struct Local {
  double g;        // normalised radius: 1 on the boundary
  double distance; // signed distance estimate in frame pixels (negative inside)
};

auto locate(Ellipse const &e, Vec2 const &pivot, double t, Vec2 const &x) -> Local
{
  auto const p = e.motion.inverse(pivot, t, x);
  auto const r = rotate({p[0] - e.centre[0], p[1] - e.centre[1]}, -e.angle);
  double const a = e.semi_axes[0];
  double const b = e.semi_axes[1];
  double const g = std::sqrt(r[0] * r[0] / (a * a) + r[1] * r[1] / (b * b));
  double const s = 1.0 + e.motion.scale_rate * t;
  if (g < 1e-9) { return {g, -std::min(a, b) * s}; }
  double const gx = r[0] / (a * a * g);
  double const gy = r[1] / (b * b * g);
  return {g, s * (g - 1.0) / std::hypot(gx, gy)};
}

auto pivot_of(Ellipse const &e) -> Vec2 { return e.motion.pivot.value_or(e.centre); }

void check_inside(PhantomSpec const &spec, Ellipse const &e, std::size_t idx)
{
  auto const pv = pivot_of(e);
  for (Index t = 0; t < spec.nt; ++t) {
    double const td = static_cast<double>(t);
    auto const c = e.motion.transform(pv, td, e.centre);
    double const s = 1.0 + e.motion.scale_rate * td;
    double const phi = e.angle + e.motion.rotation_rate * td;
    double const a = e.semi_axes[0];
    double const b = e.semi_axes[1];
    double const hx = s * std::sqrt(a * a * std::cos(phi) * std::cos(phi) + b * b * std::sin(phi) * std::sin(phi));
    double const hy = s * std::sqrt(a * a * std::sin(phi) * std::sin(phi) + b * b * std::cos(phi) * std::cos(phi));
    if (s <= 0.0 || c[0] - hx < 0.0 || c[0] + hx > static_cast<double>(spec.nx - 1) || c[1] - hy < 0.0 ||
        c[1] + hy > static_cast<double>(spec.ny - 1)) {
      throw DomainError("ellipse " + std::to_string(idx) + " leaves the field of view at frame " + std::to_string(t));
    }
  }
}

} // namespace

auto MotionLaw::transform(Vec2 const &pv, double t, Vec2 const &p) const -> Vec2
{
  double const s = 1.0 + scale_rate * t;
  auto r = rotate({p[0] - pv[0], p[1] - pv[1]}, rotation_rate * t);
  auto const sh = shift_at(*this, t);
  return {pv[0] + s * r[0] + sh[0], pv[1] + s * r[1] + sh[1]};
}

auto MotionLaw::inverse(Vec2 const &pv, double t, Vec2 const &x) const -> Vec2
{
  double const s = 1.0 + scale_rate * t;
  auto const sh = shift_at(*this, t);
  // (x - shift) is formed first so integer shifts of integer pixels stay exact.
  Vec2 const q{(x[0] - sh[0]) - pv[0], (x[1] - sh[1]) - pv[1]};
  if (rotation_rate == 0.0 && s == 1.0) { return {pv[0] + q[0], pv[1] + q[1]}; }
  auto r = rotate(q, -rotation_rate * t);
  return {pv[0] + r[0] / s, pv[1] + r[1] / s};
}

auto generate_phantom(PhantomSpec const &spec, std::uint64_t seed) -> Phantom
{
  if (spec.nx <= 0 || spec.ny <= 0 || spec.nt <= 0) { throw DomainError("phantom extents must be positive"); }
  if (spec.noise_sigma < 0.0) { throw DomainError("phantom noise_sigma must be >= 0"); }
  for (std::size_t i = 0; i < spec.ellipses.size(); ++i) {
    auto const &e = spec.ellipses[i];
    if (e.semi_axes[0] <= 0.0 || e.semi_axes[1] <= 0.0) { throw DomainError("ellipse semi-axes must be positive"); }
    check_inside(spec, e, i);
  }
  Shape3 const s{spec.nx, spec.ny, spec.nt};
  Phantom ph{Sequence(s), {RealVolume(s), RealVolume(s)}, Mask(s)};

#pragma omp parallel for schedule(static)
  for (Index t = 0; t < s.nt; ++t) {
    double const td = static_cast<double>(t);
    double const tprev = static_cast<double>(t == 0 ? s.nt - 1 : t - 1);
    for (Index y = 0; y < s.ny; ++y) {
      for (Index x = 0; x < s.nx; ++x) {
        Vec2 const px{static_cast<double>(x), static_cast<double>(y)};
        cx value{};
        Ellipse const *owner = nullptr;
        for (auto const &e : spec.ellipses) {
          auto const loc = locate(e, pivot_of(e), td, px);
          double const cover = std::clamp(0.5 - loc.distance, 0.0, 1.0);
          value += cover * e.intensity;
          if (loc.g <= 1.0) { owner = &e; }
        }
        ph.f(x, y, t) = value;
        if (owner != nullptr) {
          auto const pv = pivot_of(*owner);
          // Where this pixel's material sits in the previous frame's pose,
          // carried forward by one frame of the motion law.
          auto const base = owner->motion.inverse(pv, tprev, px);
          auto const fwd = owner->motion.transform(pv, td, base);
          ph.motion.u(x, y, t) = fwd[0] - px[0];
          ph.motion.v(x, y, t) = fwd[1] - px[1];
          ph.object(x, y, t) = 1;
        }
      }
    }
  }

  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spec.noise_sigma / std::sqrt(2.0));
    for (auto &v : ph.f.data) {
      double const re = g(rng);
      double const im = g(rng);
      v += cx{re, im};
    }
  }
  return ph;
}

auto preset(std::string const &name, Index nx, Index ny, Index nt, double noise_sigma) -> PhantomSpec
{
  PhantomSpec spec{nx, ny, nt, {}, noise_sigma};
  double const w = static_cast<double>(nx);
  double const h = static_cast<double>(ny);
  auto add = [&](double cx0, double cy0, double a, double b, double ang, double value) {
    Ellipse e;
    e.centre = {cx0 * w, cy0 * h};
    e.semi_axes = {a * w, b * h};
    e.angle = ang;
    e.intensity = {value, 0.0};
    spec.ellipses.push_back(e);
  };
  if (name == "static" || name == "translate") {
    add(0.40, 0.50, 0.25, 0.32, 0.2, 1.0);
    add(0.33, 0.40, 0.08, 0.05, 0.5, -0.4);
    add(0.47, 0.60, 0.06, 0.09, -0.3, 0.6);
    add(0.42, 0.36, 0.04, 0.04, 0.0, 0.5);
    add(0.32, 0.62, 0.05, 0.03, 1.0, -0.3);
    if (name == "translate") {
      for (auto &e : spec.ellipses) {
        e.motion.velocity = {0.5, 0.0};
      }
    }
    return spec;
  }
  if (name == "rotate") {
    add(0.50, 0.50, 0.34, 0.25, 0.0, 1.0);
    add(0.30, 0.50, 0.07, 0.05, 0.3, -0.4);
    add(0.66, 0.45, 0.06, 0.09, -0.4, 0.6);
    add(0.52, 0.64, 0.05, 0.04, 0.0, 0.5);
    add(0.50, 0.36, 0.09, 0.03, 0.2, -0.3);
    for (auto &e : spec.ellipses) {
      e.motion.rotation_rate = 0.05;
      e.motion.pivot = Vec2{0.5 * w, 0.5 * h};
    }
    return spec;
  }
  throw UsageError("unknown phantom preset '" + name + "'");
}

auto spec_from_json(std::string const &text) -> PhantomSpec
{
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (json::exception const &e) {
    throw ConfigError(std::string("malformed phantom JSON: ") + e.what());
  }
  try {
    PhantomSpec spec;
    spec.nx = j.value("nx", Index{64});
    spec.ny = j.value("ny", Index{64});
    spec.nt = j.value("nt", Index{16});
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    auto vec2 = [](json const &v) { return Vec2{v.at(0).get<double>(), v.at(1).get<double>()}; };
    for (auto const &je : j.at("ellipses")) {
      Ellipse e;
      e.centre = vec2(je.at("centre"));
      e.semi_axes = vec2(je.at("semi_axes"));
      e.angle = je.value("angle", 0.0);
      if (je.contains("intensity")) {
        auto const &iv = je.at("intensity");
        e.intensity = iv.is_array() ? cx{iv.at(0).get<double>(), iv.at(1).get<double>()} : cx{iv.get<double>(), 0.0};
      }
      if (je.contains("motion")) {
        auto const &m = je.at("motion");
        if (m.contains("velocity")) { e.motion.velocity = vec2(m.at("velocity")); }
        if (m.contains("amplitude")) { e.motion.amplitude = vec2(m.at("amplitude")); }
        e.motion.period = m.value("period", 0.0);
        e.motion.rotation_rate = m.value("rotation_rate", 0.0);
        e.motion.scale_rate = m.value("scale_rate", 0.0);
        if (m.contains("pivot")) { e.motion.pivot = vec2(m.at("pivot")); }
      }
      spec.ellipses.push_back(e);
    }
    return spec;
  } catch (json::exception const &e) {
    throw ConfigError(std::string("invalid phantom spec: ") + e.what());
  }
}

} // namespace dynamo::phantom
