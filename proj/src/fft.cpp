#include "tdho/fft.hpp"

#include <fftw3.h>

#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <algorithm>
#include <tuple>
#include <utility>

namespace tdho::fft {

namespace {

struct PlanKey {
  std::vector<int> dims;
  Direction dir;
  bool operator<(const PlanKey& o) const {
    return std::tie(dims, dir) < std::tie(o.dims, o.dir);
  }
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::span<const int> dims, Direction dir) {
    PlanKey key{std::vector<int>(dims.begin(), dims.end()), dir};
    std::lock_guard lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    CVec scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), key.dims.data(), buf, buf,
                                   dir == Direction::kForward ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("fftw: plan creation failed");
    plans_.emplace(std::move(key), plan);
    return plan;
  }

  std::size_t size() {
    std::lock_guard lock(mutex_);
    return plans_.size();
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void transform(std::span<cplx> data, std::span<const int> dims, Direction dir) {
  fftw_plan plan = cache().get(dims, dir);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  if (reinterpret_cast<std::uintptr_t>(buf) % 64 == 0) {
    fftw_execute_dft(plan, buf, buf);
    return;
  }
  CVec aligned(data.begin(), data.end());
  auto* abuf = reinterpret_cast<fftw_complex*>(aligned.data());
  fftw_execute_dft(plan, abuf, abuf);
  std::copy(aligned.begin(), aligned.end(), data.begin());
}

std::size_t plan_cache_size() { return cache().size(); }

}  // namespace tdho::fft
