// dynamo: command-line front end.
//
//   dynamo phantom     --preset translate --out f.dyn --motion-out d.dyn
//   dynamo mask        --scheme golden_radial --rays 8 --out m.dyn
//   dynamo undersample --sequence f.dyn --mask m.dyn --noise-sigma 0.01 --out b.dyn
//   dynamo reconstruct --method mc-jpdal --kspace b.dyn --mask m.dyn --out rec.dyn
//   dynamo eval        --ref f.dyn --rec rec.dyn --out metrics.csv
//   dynamo export      --rec rec.dyn --out-dir frames
//
// Exit codes: 0 success, 2 usage, 3 data, 4 solver divergence.

#include "dynamo/config.hpp"
#include "dynamo/io.hpp"
#include "dynamo/mc.hpp"
#include "dynamo/metrics.hpp"
#include "dynamo/phantom.hpp"
#include "dynamo/pipeline.hpp"
#include "dynamo/report.hpp"
#include "dynamo/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace dynamo;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kDivergence = 4 };

auto read_text(fs::path const &p) -> std::string
{
  std::ifstream is(p);
  if (!is) { throw IoError("cannot open " + p.string()); }
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(fs::path const &p, std::string const &text)
{
  std::ofstream os(p, std::ios::binary);
  if (!os) { throw IoError("cannot open " + p.string() + " for writing"); }
  os << text;
  if (!os) { throw IoError("write failed for " + p.string()); }
}

auto sidecar_path(fs::path const &kspace) -> fs::path
{
  auto p = kspace;
  p += ".json";
  return p;
}

void log_line(std::string const &msg) { std::cerr << msg << '\n'; }

struct PhantomArgs {
  std::string preset = "translate";
  std::string spec;
  Index nx = 64, ny = 64, nt = 16;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out, motion_out, object_out;
};

void run_phantom(PhantomArgs const &a)
{
  auto spec = a.spec.empty() ? phantom::preset(a.preset, a.nx, a.ny, a.nt, a.noise)
                             : phantom::spec_from_json(read_text(a.spec));
  if (a.spec.empty()) { spec.noise_sigma = a.noise; }
  auto ph = phantom::generate_phantom(spec, a.seed);
  io::save_tensor(a.out, io::from_sequence(ph.f));
  if (!a.motion_out.empty()) { io::save_tensor(a.motion_out, io::from_motion(ph.motion)); }
  if (!a.object_out.empty()) { io::save_tensor(a.object_out, io::from_mask(ph.object)); }
  std::cout << "phantom " << to_string(ph.f.shape) << " written to " << a.out << '\n';
}

struct MaskArgs {
  std::string scheme = "golden_radial";
  Index nx = 64, ny = 64, nt = 16;
  Index rays = 8;
  double reduction = 10.0;
  Index low_freq_lines = 4;
  std::uint64_t seed = 0;
  std::string out;
};

void run_mask(MaskArgs const &a)
{
  Mask m;
  if (a.scheme == "golden_radial") {
    m = sampling::golden_radial_mask(a.nx, a.ny, a.nt, a.rays);
  } else if (a.scheme == "cartesian_vd") {
    m = sampling::cartesian_vd_mask(a.nx, a.ny, a.nt, a.reduction, a.low_freq_lines, a.seed);
  } else {
    throw UsageError("unknown scheme '" + a.scheme + "'");
  }
  io::save_tensor(a.out, io::from_mask(m));
  std::cout << "mask " << to_string(m.shape) << " with " << sampling::count(m) << " samples, reduction factor "
            << sampling::reduction_factor(m) << '\n';
}

struct UndersampleArgs {
  std::string sequence, mask, out;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

void run_undersample(UndersampleArgs const &a)
{
  auto const f = io::to_sequence(io::load_tensor(a.sequence));
  auto const m = io::to_mask(io::load_tensor(a.mask));
  auto const b = pipeline::undersample(f, m, a.noise_sigma, a.seed);
  io::save_tensor(a.out, io::from_vector(b));
  nlohmann::ordered_json side = {
    {"mask", fs::absolute(a.mask).lexically_normal().string()},
    {"shape", {m.shape.nx, m.shape.ny, m.shape.nt}},
    {"samples", b.size()},
    {"noise_sigma", a.noise_sigma},
    {"seed", a.seed},
  };
  write_text(sidecar_path(a.out), side.dump(2) + "\n");
  std::cout << b.size() << " samples written to " << a.out << '\n';
}

struct ReconArgs {
  std::string method = "mc-jpdal";
  std::string config, kspace, mask, out, motion_out, motion, trace;
  bool no_wrap = false;
};

auto resolve_mask(ReconArgs const &a) -> Mask
{
  if (!a.mask.empty()) { return io::to_mask(io::load_tensor(a.mask)); }
  auto const side = sidecar_path(a.kspace);
  if (!fs::exists(side)) { throw UsageError("--mask not given and no " + side.string() + " sidecar found"); }
  auto const j = nlohmann::json::parse(read_text(side), nullptr, false);
  if (j.is_discarded() || !j.contains("mask") || !j["mask"].is_string()) {
    throw DataError(side.string() + " does not name a mask");
  }
  return io::to_mask(io::load_tensor(j["mask"].get<std::string>()));
}

void write_trace_file(fs::path const &p, std::vector<pipeline::Round> const &rounds)
{
  std::ofstream os(p);
  if (!os) { throw IoError("cannot open " + p.string() + " for writing"); }
  pipeline::write_traces(os, rounds);
}

void run_reconstruct(ReconArgs const &a, RunConfig cfg)
{
  if (a.no_wrap) { cfg.wrap = false; }
  auto const mask = resolve_mask(a);
  auto const b = io::to_vector(io::load_tensor(a.kspace));
  for (auto const &v : b) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) { throw DataError(a.kspace + " holds non-finite samples"); }
  }

  if (a.method == "zero-fill") {
    io::save_tensor(a.out, io::from_sequence(pipeline::zero_filled(b, mask)));
  } else if (a.method == "mc") {
    if (a.motion.empty()) { throw UsageError("--method mc needs --motion"); }
    auto const motion = io::to_motion(io::load_tensor(a.motion));
    if (motion.shape() != mask.shape) { throw ShapeError("motion field does not match the mask shape"); }
    auto const f0 = pipeline::zero_filled(b, mask);
    auto r = mc::mc_refine(f0, b, mask, motion, cfg.lambda, pdal::Params::from(cfg), cfg.wrap);
    if (!std::isfinite(r.objective)) { throw SolverError("motion-compensated objective is not finite"); }
    io::save_tensor(a.out, io::from_sequence(r.f));
    if (!a.trace.empty()) {
      pipeline::Round round;
      round.mc = std::move(r.trace);
      round.mc_reason = r.reason;
      round.mc_ran = true;
      write_trace_file(a.trace, {round});
    }
    log_line("mc: objective " + std::to_string(r.objective));
  } else if (a.method == "jpdal" || a.method == "mc-jpdal") {
    auto r = a.method == "jpdal" ? pipeline::jpdal_only(b, mask, cfg, log_line) : pipeline::mc_jpdal(b, mask, cfg, log_line);
    for (auto const &v : r.f.data) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) { throw SolverError("reconstruction is not finite"); }
    }
    io::save_tensor(a.out, io::from_sequence(r.f));
    if (!a.motion_out.empty()) { io::save_tensor(a.motion_out, io::from_motion(r.motion)); }
    if (!a.trace.empty()) { write_trace_file(a.trace, r.rounds); }
  } else {
    throw UsageError("unknown method '" + a.method + "'");
  }
  std::cout << "reconstruction written to " << a.out << '\n';
}

struct EvalArgs {
  std::string ref, rec, out;
  bool global = false;
  Index window = 7;
};

void run_eval(EvalArgs const &a)
{
  auto const ref = io::to_sequence(io::load_tensor(a.ref));
  auto const rec = io::to_sequence(io::load_tensor(a.rec));
  metrics::SsimOptions opt;
  opt.window = a.window;
  opt.global = a.global;
  auto const report = metrics::evaluate(rec, ref, opt);
  if (a.out.empty()) {
    report.write_csv(std::cout);
  } else {
    std::ofstream os(a.out);
    if (!os) { throw IoError("cannot open " + a.out + " for writing"); }
    report.write_csv(os);
    std::cout << "rmse " << report.rmse << " ssim " << report.mean_ssim << '\n';
  }
}

struct ExportArgs {
  std::string rec, ref, out_dir;
  std::string format = "pgm16";
  std::optional<Index> column;
};

void run_export(ExportArgs const &a)
{
  auto const f = io::to_sequence(io::load_tensor(a.rec));
  if (a.format == "csv") {
    Index const col = a.column.value_or(f.shape.nx / 2);
    std::error_code ec;
    fs::create_directories(a.out_dir, ec);
    if (ec) { throw IoError("cannot create " + a.out_dir + ": " + ec.message()); }
    auto const p = fs::path(a.out_dir) / ("profile_x" + std::to_string(col) + ".csv");
    std::ostringstream os;
    report::write_profile_csv(os, f, col);
    write_text(p, os.str());
    std::cout << "wrote " << p.string() << '\n';
    return;
  }
  if (a.format != "pgm16") { throw UsageError("unknown format '" + a.format + "'"); }
  std::optional<Sequence> ref;
  if (!a.ref.empty()) { ref = io::to_sequence(io::load_tensor(a.ref)); }
  report::ExportOptions opt;
  opt.column = a.column;
  opt.reference = ref ? &*ref : nullptr;
  auto const files = report::export_sequence(f, a.out_dir, opt);
  std::cout << "wrote " << files.size() << " files to " << a.out_dir << '\n';
}

auto thread_count(std::optional<int> flag) -> int
{
  if (flag) { return *flag; }
  if (char const *env = std::getenv("DYNAMO_THREADS")) {
    try {
      std::size_t used = 0;
      int const n = std::stoi(env, &used);
      if (used == std::string(env).size() && n >= 0) { return n; }
    } catch (std::exception const &) {
    }
    throw UsageError(std::string("DYNAMO_THREADS must be a nonnegative integer, got '") + env + "'");
  }
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Dynamic MRI reconstruction with joint motion estimation"};
  app.require_subcommand(1);
  app.allow_extras(false);

  std::optional<int> threads;
  app.add_option("--threads", threads, "worker threads (0 = auto); DYNAMO_THREADS is the fallback")
    ->check(CLI::NonNegativeNumber);

  PhantomArgs ph;
  auto *cph = app.add_subcommand("phantom", "render a synthetic dynamic phantom");
  cph->add_option("--preset", ph.preset, "static | translate | rotate");
  cph->add_option("--spec", ph.spec, "phantom description in JSON (overrides --preset)");
  cph->add_option("--nx", ph.nx)->check(CLI::PositiveNumber);
  cph->add_option("--ny", ph.ny)->check(CLI::PositiveNumber);
  cph->add_option("--nt", ph.nt)->check(CLI::PositiveNumber);
  cph->add_option("--noise", ph.noise, "image-domain noise sigma")->check(CLI::NonNegativeNumber);
  cph->add_option("--seed", ph.seed);
  cph->add_option("--out", ph.out)->required();
  cph->add_option("--motion-out", ph.motion_out, "ground-truth backward displacement");
  cph->add_option("--object-out", ph.object_out, "object support mask");

  MaskArgs mk;
  auto *cmk = app.add_subcommand("mask", "generate a k-space sampling mask");
  cmk->add_option("--scheme", mk.scheme, "golden_radial | cartesian_vd");
  cmk->add_option("--nx", mk.nx)->check(CLI::PositiveNumber);
  cmk->add_option("--ny", mk.ny)->check(CLI::PositiveNumber);
  cmk->add_option("--nt", mk.nt)->check(CLI::PositiveNumber);
  cmk->add_option("--rays", mk.rays, "rays per frame (golden_radial)");
  cmk->add_option("--reduction", mk.reduction, "reduction factor (cartesian_vd)");
  cmk->add_option("--low-freq-lines", mk.low_freq_lines, "fully sampled lines around DC (cartesian_vd)");
  cmk->add_option("--seed", mk.seed);
  cmk->add_option("--out", mk.out)->required();

  UndersampleArgs us;
  auto *cus = app.add_subcommand("undersample", "simulate measurements b = A f + n");
  cus->add_option("--sequence", us.sequence)->required();
  cus->add_option("--mask", us.mask)->required();
  cus->add_option("--noise-sigma", us.noise_sigma)->check(CLI::NonNegativeNumber);
  cus->add_option("--seed", us.seed);
  cus->add_option("--out", us.out)->required();

  ReconArgs rc;
  std::optional<std::uint64_t> seed;
  auto *crc = app.add_subcommand("reconstruct", "reconstruct a sequence from k-space samples");
  crc->add_option("--method", rc.method, "zero-fill | jpdal | mc | mc-jpdal");
  crc->add_option("--config", rc.config, "RunConfig JSON");
  crc->add_option("--kspace", rc.kspace)->required();
  crc->add_option("--mask", rc.mask, "defaults to the mask named in the k-space sidecar");
  crc->add_option("--out", rc.out)->required();
  crc->add_option("--motion-out", rc.motion_out, "densified motion at the finest scale");
  crc->add_option("--motion", rc.motion, "motion field for --method mc");
  crc->add_option("--trace", rc.trace, "per-iteration solver trace CSV");
  crc->add_option("--seed", seed, "overrides the config seed");
  crc->add_flag("--no-wrap", rc.no_wrap, "do not pair the first frame with the last");

  EvalArgs ev;
  auto *cev = app.add_subcommand("eval", "RMSE and SSIM against a reference");
  cev->add_option("--ref", ev.ref)->required();
  cev->add_option("--rec", ev.rec)->required();
  cev->add_option("--out", ev.out, "CSV path; stdout when omitted");
  cev->add_option("--ssim-window", ev.window)->check(CLI::PositiveNumber);
  cev->add_flag("--ssim-global", ev.global, "one SSIM window per frame");

  ExportArgs ex;
  auto *cex = app.add_subcommand("export", "write magnitude images and a y-t profile");
  cex->add_option("--rec", ex.rec)->required();
  cex->add_option("--format", ex.format, "pgm16 | csv");
  cex->add_option("--out-dir", ex.out_dir)->required();
  cex->add_option("--column", ex.column, "x column of the y-t profile (default nx/2)");
  cex->add_option("--ref", ex.ref, "reference for difference images");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    set_threads(thread_count(threads));
    RunConfig cfg;
    if (!rc.config.empty()) { cfg = load_config(rc.config); }
    if (seed) { cfg.seed = *seed; }
    cfg.validate();
    if (rc.no_wrap) { cfg.wrap = false; }
    std::cout << "config " << nlohmann::json::parse(to_json(cfg)).dump() << '\n';

    if (cph->parsed()) { run_phantom(ph); }
    if (cmk->parsed()) { run_mask(mk); }
    if (cus->parsed()) { run_undersample(us); }
    if (crc->parsed()) { run_reconstruct(rc, cfg); }
    if (cev->parsed()) { run_eval(ev); }
    if (cex->parsed()) { run_export(ex); }
  } catch (UsageError const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (DataError const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (SolverError const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
