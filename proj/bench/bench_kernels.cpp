#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "tdho/fft.hpp"
#include "tdho/kernels.hpp"

namespace {

using tdho::cplx;

std::vector<cplx> field(std::size_t n) {
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {std::cos(0.01 * i), std::sin(0.013 * i)};
  return v;
}

std::vector<double> phase(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1e-4 * static_cast<double>(i % 977);
  return v;
}

template <bool Parallel>
void BM_MultiplyPhase(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto psi = field(n);
  const auto ph = phase(n);
  for (auto _ : state) {
    if constexpr (Parallel) tdho::kernels::multiply_phase(psi, ph);
    else tdho::kernels::serial::multiply_phase(psi, ph);
    benchmark::DoNotOptimize(psi.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <bool Parallel>
void BM_Dot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = field(n), b = field(n);
  for (auto _ : state) {
    cplx r = Parallel ? tdho::kernels::dot(a, b) : tdho::kernels::serial::dot(a, b);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <bool Parallel>
void BM_Backproject(benchmark::State& state) {
  const int points = static_cast<int>(state.range(0));
  const int angles = 64, row_len = 257;
  std::vector<double> rows(static_cast<std::size_t>(angles) * row_len, 0.5);
  std::vector<double> c(angles), s(angles);
  for (int k = 0; k < angles; ++k) {
    c[k] = std::cos(M_PI * k / angles);
    s[k] = std::sin(M_PI * k / angles);
  }
  std::vector<double> image(static_cast<std::size_t>(points) * points);
  for (auto _ : state) {
    if constexpr (Parallel)
      tdho::kernels::backproject(image, points, 4.0, rows, row_len, c, s, -8.0, 1.0 / 16, 0.05);
    else
      tdho::kernels::serial::backproject(image, points, 4.0, rows, row_len, c, s, -8.0, 1.0 / 16,
                                         0.05);
    benchmark::DoNotOptimize(image.data());
  }
}

void BM_Fft2d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  tdho::fft::CVec data(static_cast<std::size_t>(n) * n, cplx(1.0, 0.5));
  const int dims[2] = {n, n};
  for (auto _ : state) {
    tdho::fft::transform(data, dims, tdho::fft::Direction::kForward);
    benchmark::DoNotOptimize(data.data());
  }
}

}  // namespace

BENCHMARK(BM_MultiplyPhase<false>)->Arg(1 << 14)->Arg(1 << 16)->Arg(1 << 18);
BENCHMARK(BM_MultiplyPhase<true>)->Arg(1 << 14)->Arg(1 << 16)->Arg(1 << 18);
BENCHMARK(BM_Dot<false>)->Arg(1 << 14)->Arg(1 << 16)->Arg(1 << 18);
BENCHMARK(BM_Dot<true>)->Arg(1 << 14)->Arg(1 << 16)->Arg(1 << 18);
BENCHMARK(BM_Backproject<false>)->Arg(64)->Arg(128);
BENCHMARK(BM_Backproject<true>)->Arg(64)->Arg(128);
BENCHMARK(BM_Fft2d)->Arg(128)->Arg(256);

BENCHMARK_MAIN();
