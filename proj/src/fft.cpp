#include "dynamo/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace dynamo::fft {

namespace {

// (rank, n0, n1, howmany, stride, dist, sign)
using PlanKey = std::tuple<int, int, int, int, int, int, int>;

class PlanCache
{
public:
  ~PlanCache()
  {
    for (auto &[key, plan] : plans_) {
      fftw_destroy_plan(plan);
    }
  }

  auto get(PlanKey const &key) -> fftw_plan
  {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) { return it->second; }
    auto const [rank, n0, n1, howmany, stride, dist, sign] = key;
    int dims[2] = {n0, n1};
    std::size_t const span = static_cast<std::size_t>(stride) * static_cast<std::size_t>(n0 * (rank == 2 ? n1 : 1)) +
                             static_cast<std::size_t>(dist) * static_cast<std::size_t>(howmany);
    auto *buf = fftw_alloc_complex(span);
    // FFTW_ESTIMATE keeps the chosen algorithm, and hence the output bits,
    // independent of timing.
    auto plan = fftw_plan_many_dft(rank, dims, howmany, buf, nullptr, stride, dist, buf, nullptr, stride, dist, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (plan == nullptr) { throw Error("FFTW failed to create a plan"); }
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

auto cache() -> PlanCache &
{
  static PlanCache c;
  return c;
}

void scale(cx *data, std::size_t n, double s)
{
  for (std::size_t i = 0; i < n; ++i) {
    data[i] *= s;
  }
}

} // namespace

void frame2d(cx *data, Index nx, Index ny, bool forward)
{
  // Row-major [y][x] so x is the contiguous (fastest) axis.
  auto plan = cache().get({2, static_cast<int>(ny), static_cast<int>(nx), 1, 1, 0, forward ? FFTW_FORWARD : FFTW_BACKWARD});
  auto *p = reinterpret_cast<fftw_complex *>(data);
  fftw_execute_dft(plan, p, p);
  scale(data, static_cast<std::size_t>(nx * ny), 1.0 / std::sqrt(static_cast<double>(nx * ny)));
}

void along_t(cx *data, Index nx, Index ny, Index nt, bool forward)
{
  auto const px = static_cast<int>(nx * ny);
  auto plan = cache().get({1, static_cast<int>(nt), 1, px, px, 1, forward ? FFTW_FORWARD : FFTW_BACKWARD});
  auto *p = reinterpret_cast<fftw_complex *>(data);
  fftw_execute_dft(plan, p, p);
  scale(data, static_cast<std::size_t>(px * nt), 1.0 / std::sqrt(static_cast<double>(nt)));
}

} // namespace dynamo::fft
