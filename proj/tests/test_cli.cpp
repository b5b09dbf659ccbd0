#include "support.hpp"

#include "dynamo/io.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace dynamo;
using testing::TempDir;

namespace {

auto cli() -> std::string { return DYNAMO_CLI_PATH; }

// Runs the CLI with `args`; stdout and stderr go to `log`. Returns the exit code.
auto run(std::string const &args, std::filesystem::path const &log, std::string const &env = {}) -> int
{
  std::string const cmd = env + (env.empty() ? "" : " ") + "\"" + cli() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  int const status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

auto slurp(std::filesystem::path const &p) -> std::string
{
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

auto q(std::filesystem::path const &p) -> std::string { return "\"" + p.string() + "\""; }

struct Workspace {
  TempDir dir{"cli"};
  std::filesystem::path log = dir / "log.txt";

  // phantom, mask and k-space for a small problem
  void prepare()
  {
    REQUIRE(run("phantom --preset translate --nx 32 --ny 32 --nt 4 --out " + q(dir / "f.dyn") + " --motion-out " +
                  q(dir / "m.dyn"),
                log) == 0);
    REQUIRE(run("mask --scheme golden_radial --nx 32 --ny 32 --nt 4 --rays 8 --out " + q(dir / "mask.dyn"), log) == 0);
    REQUIRE(run("undersample --sequence " + q(dir / "f.dyn") + " --mask " + q(dir / "mask.dyn") +
                  " --noise-sigma 0.01 --seed 3 --out " + q(dir / "b.dyn"),
                log) == 0);
    std::ofstream(dir / "cfg.json") << R"({"j_coarse": 2, "j_fine": 1, "max_iters": 15})";
  }
};

} // namespace

TEST_CASE("usage errors exit with 2")
{
  Workspace w;
  CHECK(run("", w.log) == 2);
  CHECK(run("phantom", w.log) == 2); // --out is required
  CHECK(run("phantom --out x.dyn --bogus 1", w.log) == 2);
  CHECK(run("frobnicate", w.log) == 2);
  CHECK(run("phantom --preset heart --out " + q(w.dir / "x.dyn"), w.log) == 2);
  CHECK(run("mask --scheme spiral --out " + q(w.dir / "x.dyn"), w.log) == 2);
  CHECK(run("phantom --preset static --out " + q(w.dir / "x.dyn"), w.log, "DYNAMO_THREADS=abc") == 2);
  std::ofstream(w.dir / "bad.json") << R"({"rho": 3})";
  CHECK(run("reconstruct --config " + q(w.dir / "bad.json") + " --kspace k --out o", w.log) == 2);
  CHECK(run("--help", w.log) == 0);
}

TEST_CASE("data errors exit with 3")
{
  Workspace w;
  w.prepare();
  CHECK(run("reconstruct --kspace " + q(w.dir / "missing.dyn") + " --mask " + q(w.dir / "mask.dyn") + " --out " +
              q(w.dir / "r.dyn"),
            w.log) == 3);
  CHECK(run("export --rec " + q(w.dir / "f.dyn") + " --out-dir " + q(w.dir / "ex") + " --column 99", w.log) == 3);
  CHECK(run("eval --ref " + q(w.dir / "f.dyn") + " --rec " + q(w.dir / "mask.dyn"), w.log) == 3);
  std::ofstream(w.dir / "junk.dyn") << "not a tensor";
  CHECK(run("eval --ref " + q(w.dir / "f.dyn") + " --rec " + q(w.dir / "junk.dyn"), w.log) == 3);
}

TEST_CASE("non-finite k-space is a data error")
{
  Workspace w;
  w.prepare();
  auto b = io::to_vector(io::load_tensor(w.dir / "b.dyn"));
  b[5] = cx{std::nan(""), 0.0};
  io::save_tensor(w.dir / "nan.dyn", io::from_vector(b));
  CHECK(run("reconstruct --method jpdal --config " + q(w.dir / "cfg.json") + " --kspace " + q(w.dir / "nan.dyn") +
              " --mask " + q(w.dir / "mask.dyn") + " --out " + q(w.dir / "r.dyn"),
            w.log) == 3);
  CHECK_FALSE(std::filesystem::exists(w.dir / "r.dyn"));
}

TEST_CASE("solver divergence exits with 4")
{
  Workspace w;
  w.prepare();
  // a step size so large that the linesearch cannot recover
  std::ofstream(w.dir / "huge.json") << R"({"j_coarse": 2, "j_fine": 1, "max_iters": 15, "sigma0": 1e300})";
  CHECK(run("reconstruct --method jpdal --config " + q(w.dir / "huge.json") + " --kspace " + q(w.dir / "b.dyn") +
              " --mask " + q(w.dir / "mask.dyn") + " --out " + q(w.dir / "r.dyn"),
            w.log) == 4);
  CHECK(slurp(w.log).find("linesearch") != std::string::npos);
}

TEST_CASE("zero-fill reconstruction equals the adjoint")
{
  Workspace w;
  w.prepare();
  REQUIRE(run("reconstruct --method zero-fill --kspace " + q(w.dir / "b.dyn") + " --mask " + q(w.dir / "mask.dyn") +
                " --out " + q(w.dir / "zf.dyn"),
              w.log) == 0);
  auto const mask = io::to_mask(io::load_tensor(w.dir / "mask.dyn"));
  auto const b = io::to_vector(io::load_tensor(w.dir / "b.dyn"));
  auto const zf = io::to_sequence(io::load_tensor(w.dir / "zf.dyn"));
  auto const expect = measure_op(mask).adjoint(b);
  // stored as complex64: equal up to the final rounding
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(std::abs(zf.data[i].real() - expect[i].real()) <= 1.2e-7 * std::abs(expect[i].real()));
    CHECK(std::abs(zf.data[i].imag() - expect[i].imag()) <= 1.2e-7 * std::abs(expect[i].imag()));
  }
  CHECK(slurp(w.log).rfind("config {", 0) == 0);
}

TEST_CASE("k-space sidecar names the mask")
{
  Workspace w;
  w.prepare();
  auto const side = slurp(w.dir / "b.dyn.json");
  CHECK(side.find("mask.dyn") != std::string::npos);
  CHECK(side.find("noise_sigma") != std::string::npos);
  // --mask omitted: taken from the sidecar
  REQUIRE(run("reconstruct --method zero-fill --kspace " + q(w.dir / "b.dyn") + " --out " + q(w.dir / "a.dyn"), w.log) == 0);
  REQUIRE(run("reconstruct --method zero-fill --kspace " + q(w.dir / "b.dyn") + " --mask " + q(w.dir / "mask.dyn") +
                " --out " + q(w.dir / "c.dyn"),
              w.log) == 0);
  CHECK(slurp(w.dir / "a.dyn") == slurp(w.dir / "c.dyn"));
}

TEST_CASE("every subcommand is reproducible")
{
  Workspace w;
  w.prepare();
  auto twice = [&](std::string const &args, std::string const &out) {
    REQUIRE(run(args + " --out " + q(w.dir / (out + "1")), w.log) == 0);
    REQUIRE(run(args + " --out " + q(w.dir / (out + "2")), w.log) == 0);
    CHECK(slurp(w.dir / (out + "1")) == slurp(w.dir / (out + "2")));
  };
  twice("phantom --preset rotate --nx 32 --ny 32 --nt 3 --noise 0.02 --seed 5", "ph");
  twice("mask --scheme cartesian_vd --nx 32 --ny 32 --nt 3 --reduction 4 --low-freq-lines 2 --seed 1", "mk");
  twice("undersample --sequence " + q(w.dir / "f.dyn") + " --mask " + q(w.dir / "mask.dyn") + " --noise-sigma 0.05 --seed 8",
        "us");
  std::string const rc = "reconstruct --config " + q(w.dir / "cfg.json") + " --kspace " + q(w.dir / "b.dyn") + " --mask " +
                         q(w.dir / "mask.dyn");
  twice(rc + " --method mc-jpdal", "rec");
  twice(rc + " --method jpdal", "jp");
  twice(rc + " --method mc --motion " + q(w.dir / "m.dyn"), "mc");
}

TEST_CASE("reconstruct writes motion and traces; eval and export consume the result")
{
  Workspace w;
  w.prepare();
  REQUIRE(run("reconstruct --method mc-jpdal --config " + q(w.dir / "cfg.json") + " --kspace " + q(w.dir / "b.dyn") +
                " --mask " + q(w.dir / "mask.dyn") + " --out " + q(w.dir / "r.dyn") + " --motion-out " +
                q(w.dir / "mo.dyn") + " --trace " + q(w.dir / "t.csv"),
              w.log) == 0);
  auto const motion = io::to_motion(io::load_tensor(w.dir / "mo.dyn"));
  CHECK(motion.shape() == Shape3{32, 32, 4});
  auto const trace = slurp(w.dir / "t.csv");
  CHECK(trace.rfind("scale,stage,iter,cost,sigma,trials,rel_change\n", 0) == 0);
  CHECK(trace.find(",mc,") != std::string::npos);

  REQUIRE(run("eval --ref " + q(w.dir / "f.dyn") + " --rec " + q(w.dir / "r.dyn") + " --out " + q(w.dir / "e.csv"), w.log) ==
          0);
  auto const csv = slurp(w.dir / "e.csv");
  CHECK(csv.rfind("frame,rmse,ssim\n", 0) == 0);
  CHECK(csv.find("\nall,") != std::string::npos);
  REQUIRE(run("eval --ssim-global --ref " + q(w.dir / "f.dyn") + " --rec " + q(w.dir / "r.dyn"), w.log) == 0);
  CHECK(slurp(w.log).find("all,") != std::string::npos);

  REQUIRE(run("export --rec " + q(w.dir / "r.dyn") + " --out-dir " + q(w.dir / "ex") + " --column 10 --ref " +
                q(w.dir / "f.dyn"),
              w.log) == 0);
  CHECK(std::filesystem::exists(w.dir / "ex" / "frame_003.pgm"));
  CHECK(std::filesystem::exists(w.dir / "ex" / "diff_000.pgm"));
  CHECK(std::filesystem::exists(w.dir / "ex" / "profile_x10.csv"));
  REQUIRE(run("export --format csv --rec " + q(w.dir / "r.dyn") + " --out-dir " + q(w.dir / "ex2"), w.log) == 0);
  CHECK(std::filesystem::exists(w.dir / "ex2" / "profile_x16.csv"));
  CHECK_FALSE(std::filesystem::exists(w.dir / "ex2" / "frame_000.pgm"));
}

TEST_CASE("thread count flag and environment fallback")
{
  Workspace w;
  CHECK(run("--threads 2 phantom --preset static --nx 16 --ny 16 --nt 2 --out " + q(w.dir / "a.dyn"), w.log) == 0);
  CHECK(run("phantom --preset static --nx 16 --ny 16 --nt 2 --out " + q(w.dir / "b.dyn"), w.log, "DYNAMO_THREADS=1") == 0);
  CHECK(slurp(w.dir / "a.dyn") == slurp(w.dir / "b.dyn"));
  CHECK(run("--threads -1 phantom --out " + q(w.dir / "c.dyn"), w.log) == 2);
}
