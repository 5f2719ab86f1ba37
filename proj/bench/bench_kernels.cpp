// Serial reference GEMM against the OpenMP kernels at the shapes training uses.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fusionette/kernels.hpp"

namespace kernels = fusionette::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// args: batch, m, k, n, threads (0 = serial reference)
void BM_gemm_nn(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto n = static_cast<std::size_t>(state.range(3));
  const int threads = static_cast<int>(state.range(4));
  const auto a = random_values(batch * m * k, 1);
  const auto b = random_values(batch * k * n, 2);
  std::vector<double> c(batch * m * n);
  kernels::KernelThreadScope scope(threads > 0 ? threads : 1);
  for (auto _ : state) {
    if (threads == 0)
      kernels::reference::gemm_nn(batch, m, k, n, a, b, c);
    else
      kernels::gemm_nn(batch, m, k, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * m * k * n));
  state.SetLabel(threads == 0 ? "reference" : "openmp x" + std::to_string(threads));
}

void BM_gemm_tn(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const int threads = static_cast<int>(state.range(3));
  const auto a = random_values(k * m, 3);
  const auto b = random_values(k * n, 4);
  std::vector<double> c(m * n);
  kernels::KernelThreadScope scope(threads > 0 ? threads : 1);
  for (auto _ : state) {
    if (threads == 0)
      kernels::reference::gemm_tn(1, m, k, n, a, b, c);
    else
      kernels::gemm_tn(1, m, k, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k * n));
  state.SetLabel(threads == 0 ? "reference" : "openmp x" + std::to_string(threads));
}

}  // namespace

// Guided projection forward: [32 x 512] x [512 x 256].
BENCHMARK(BM_gemm_nn)->Args({1, 32, 512, 256, 0})->Args({1, 32, 512, 256, 1})
    ->Args({1, 32, 512, 256, 2})->Args({1, 32, 512, 256, 4})->UseRealTime();
// DiffAttn projections on the fused tokens: 32 batches of [4 x 128] x [128 x 128].
BENCHMARK(BM_gemm_nn)->Args({32, 4, 128, 128, 0})->Args({32, 4, 128, 128, 1})
    ->Args({32, 4, 128, 128, 2})->Args({32, 4, 128, 128, 4})->UseRealTime();
// Weight gradient of the guided projection: [512 x 32]^T-style reduction.
BENCHMARK(BM_gemm_tn)->Args({512, 32, 256, 0})->Args({512, 32, 256, 1})
    ->Args({512, 32, 256, 2})->Args({512, 32, 256, 4})->UseRealTime();

BENCHMARK_MAIN();
