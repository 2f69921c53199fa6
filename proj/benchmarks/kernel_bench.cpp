#include <benchmark/benchmark.h>

#include <cmath>

#include "fracdiff/kernel.hpp"
#include "fracdiff/kernel_cache.hpp"

namespace fd = fracdiff;

static void BM_TabulateProfile(benchmark::State& state) {
  fd::ProfileKey key;
  key.theta = static_cast<double>(state.range(0)) / 10.0;
  key.alpha = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(fd::tabulate_profile(key));
}
BENCHMARK(BM_TabulateProfile)->Args({5, 0})->Args({10, 0})->Args({15, 0})->Args({15, 2})->Unit(benchmark::kMillisecond);

static void BM_EvalKernel(benchmark::State& state) {
  const auto P = fd::KernelLibrary::shared().get(1.5, 0, 0);
  double x = 0.0, sum = 0.0;
  for (auto _ : state) {
    sum += fd::eval_kernel_derivative(*P, x, 2.0);
    x = std::fmod(x + 0.37, 50.0);
  }
  benchmark::DoNotOptimize(sum);
}
BENCHMARK(BM_EvalKernel);
