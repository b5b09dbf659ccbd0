#include "dynamo/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dynamo {

using nlohmann::json;

auto to_string(Prior p) -> std::string
{
  switch (p) {
  case Prior::L1: return "l1";
  case Prior::TV: return "tv";
  case Prior::LowRank: return "low_rank";
  case Prior::L1TV: return "l1_tv";
  case Prior::LowRankL1: return "lr_l1";
  }
  return "?";
}

auto parse_prior(std::string const &name) -> Prior
{
  if (name == "l1") { return Prior::L1; }
  if (name == "tv") { return Prior::TV; }
  if (name == "low_rank") { return Prior::LowRank; }
  if (name == "l1_tv") { return Prior::L1TV; }
  if (name == "lr_l1") { return Prior::LowRankL1; }
  throw ConfigError("unknown prior '" + name + "'");
}

namespace {

void require(bool ok, std::string const &what)
{
  if (!ok) { throw ConfigError("config value out of range: " + what); }
}

template <typename T>
auto number(json const &j, char const *key) -> T
{
  auto const &v = j.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) { throw ConfigError(std::string("config key '") + key + "' must be an integer"); }
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) { return v.get<T>(); }
      if (v.get<std::int64_t>() < 0) { throw ConfigError(std::string("config key '") + key + "' must be nonnegative"); }
    }
    return v.get<T>();
  } else {
    if (!v.is_number()) { throw ConfigError(std::string("config key '") + key + "' must be a number"); }
    return v.get<T>();
  }
}

auto text(json const &j, char const *key) -> std::string
{
  auto const &v = j.at(key);
  if (!v.is_string()) { throw ConfigError(std::string("config key '") + key + "' must be a string"); }
  return v.get<std::string>();
}

} // namespace

void RunConfig::validate() const
{
  for (auto [name, w] : {std::pair{"eta", eta}, {"eta2", eta2}, {"tau", tau}, {"gamma", gamma}, {"lambda", lambda}}) {
    require(std::isfinite(w) && w >= 0.0, std::string(name) + " must be >= 0");
  }
  require(j_fine >= 0 && j_coarse >= j_fine, "need j_coarse >= j_fine >= 0");
  require(j_coarse <= 12, "j_coarse must be <= 12");
  require(spline_degree >= 0 && spline_degree <= 7, "spline_degree must be in [0, 7]");
  require(std::isfinite(sigma0) && sigma0 > 0.0, "sigma0 must be > 0");
  require(std::isfinite(alpha) && alpha > 0.0, "alpha must be > 0");
  require(rho > 0.0 && rho < 1.0, "rho must be in (0,1)");
  require(ls_eps > 0.0 && ls_eps < 1.0, "ls_eps must be in (0,1)");
  require(std::isfinite(stop_tol) && stop_tol > 0.0, "stop_tol must be > 0");
  require(max_iters > 0, "max_iters must be > 0");
  require(refresh_interval > 0, "refresh_interval must be > 0");
  require(motion_cap > 0.0, "motion_cap must be > 0");
}

auto parse_config(std::string const &json_text) -> RunConfig
{
  json j;
  try {
    j = json::parse(json_text);
  } catch (json::parse_error const &e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  if (!j.is_object()) { throw ConfigError("config must be a JSON object"); }

  static std::set<std::string> const known{
    "eta", "eta2", "tau", "gamma", "lambda", "prior", "transform", "motion_smoother", "j_coarse", "j_fine",
    "spline_degree", "sigma0", "alpha", "rho", "ls_eps", "stop_tol", "max_iters", "refresh_interval",
    "wrap", "motion_cap", "seed"};
  for (auto const &item : j.items()) {
    if (!known.contains(item.key())) { throw ConfigError("unknown config key '" + item.key() + "'"); }
  }

  RunConfig c;
  auto real = [&](char const *key, double &dst) {
    if (j.contains(key)) { dst = number<double>(j, key); }
  };
  auto integer = [&](char const *key, int &dst) {
    if (j.contains(key)) { dst = number<int>(j, key); }
  };
  real("eta", c.eta);
  real("eta2", c.eta2);
  real("tau", c.tau);
  real("gamma", c.gamma);
  real("lambda", c.lambda);
  real("sigma0", c.sigma0);
  real("alpha", c.alpha);
  real("rho", c.rho);
  real("ls_eps", c.ls_eps);
  real("stop_tol", c.stop_tol);
  real("motion_cap", c.motion_cap);
  integer("j_coarse", c.j_coarse);
  integer("j_fine", c.j_fine);
  integer("spline_degree", c.spline_degree);
  integer("max_iters", c.max_iters);
  integer("refresh_interval", c.refresh_interval);
  if (j.contains("seed")) { c.seed = number<std::uint64_t>(j, "seed"); }
  if (j.contains("prior")) { c.prior = parse_prior(text(j, "prior")); }
  if (j.contains("transform")) {
    auto const t = text(j, "transform");
    if (t == "temporal_fft") {
      c.transform = SparsifyingTransform::TemporalFFT;
    } else if (t == "identity") {
      c.transform = SparsifyingTransform::Identity;
    } else {
      throw ConfigError("unknown transform '" + t + "'");
    }
  }
  if (j.contains("motion_smoother")) {
    auto const m = text(j, "motion_smoother");
    if (m == "tv") {
      c.motion_smoother = MotionSmoother::TV;
    } else if (m == "l2") {
      c.motion_smoother = MotionSmoother::L2;
    } else {
      throw ConfigError("unknown motion_smoother '" + m + "'");
    }
  }
  if (j.contains("wrap")) {
    if (!j.at("wrap").is_boolean()) { throw ConfigError("config key 'wrap' must be a boolean"); }
    c.wrap = j.at("wrap").get<bool>();
  }
  c.validate();
  return c;
}

auto load_config(std::filesystem::path const &path) -> RunConfig
{
  std::ifstream in(path);
  if (!in) { throw IoError("cannot open config " + path.string()); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

auto to_json(RunConfig const &c) -> std::string
{
  json j{{"eta", c.eta},
         {"eta2", c.eta2},
         {"tau", c.tau},
         {"gamma", c.gamma},
         {"lambda", c.lambda},
         {"prior", to_string(c.prior)},
         {"transform", c.transform == SparsifyingTransform::TemporalFFT ? "temporal_fft" : "identity"},
         {"motion_smoother", c.motion_smoother == MotionSmoother::TV ? "tv" : "l2"},
         {"j_coarse", c.j_coarse},
         {"j_fine", c.j_fine},
         {"spline_degree", c.spline_degree},
         {"sigma0", c.sigma0},
         {"alpha", c.alpha},
         {"rho", c.rho},
         {"ls_eps", c.ls_eps},
         {"stop_tol", c.stop_tol},
         {"max_iters", c.max_iters},
         {"refresh_interval", c.refresh_interval},
         {"wrap", c.wrap},
         {"motion_cap", c.motion_cap},
         {"seed", c.seed}};
  return j.dump(2);
}

} // namespace dynamo
