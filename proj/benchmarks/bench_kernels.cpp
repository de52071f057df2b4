// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <vector>

#include "hot/backward.hpp"
#include "hot/hadamard.hpp"
#include "hot/igemm.hpp"
#include "hot/quantizer.hpp"
#include "hot/rng.hpp"

namespace {

using namespace hot;

void BM_Fwht(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix v = random_matrix(rng, n, 1, Normal{});
  std::vector<float> buf(v.data().begin(), v.data().end());
  for (auto _ : state) {
    fwht_inplace(buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Fwht)->RangeMultiplier(4)->Range(16, 1024);

void BM_BlockHt(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Matrix m = random_matrix(rng, rows, 768, Normal{});
  const HadamardConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(block_ht(m, Axis::Rows, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}
BENCHMARK(BM_BlockHt)->Arg(64)->Arg(256);

void BM_Quantize(benchmark::State& state) {
  Rng rng(3);
  const Matrix m = random_matrix(rng, 256, 768, Normal{});
  const int bits = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(quantize(m, bits, Granularity::PerTensor, Rounding::PseudoStochastic));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.size()));
}
BENCHMARK(BM_Quantize)->Arg(4)->Arg(8);

void BM_GemmInt(benchmark::State& state) {
  const int bits = static_cast<int>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  Rng rng(4);
  const QuantTensor a = quantize(random_matrix(rng, n, n, Normal{}), bits, Granularity::PerTensor, Rounding::Nearest);
  const QuantTensor b = quantize(random_matrix(rng, n, n, Normal{}), bits, Granularity::PerTensor, Rounding::Nearest);
  for (auto _ : state) benchmark::DoNotOptimize(gemm_int(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_GemmInt)->Args({4, 128})->Args({8, 128})->Args({4, 256})->Args({8, 256});

void BM_Gx(benchmark::State& state) {
  Rng rng(5);
  const Matrix gy = random_matrix(rng, 197, 768, Normal{});
  const Matrix w = random_matrix(rng, 768, 768, Normal{});
  BackwardConfig cfg = BackwardConfig::hot();
  if (state.range(0) == 0) cfg.gx_mode = GxMode::Fp;
  for (auto _ : state) benchmark::DoNotOptimize(hot_gx(gy, w, cfg));
}
BENCHMARK(BM_Gx)->Arg(0)->Arg(1)->ArgName("hot");

void BM_Gw(benchmark::State& state) {
  Rng rng(6);
  const Matrix gy = random_matrix(rng, 197, 768, Normal{});
  const Matrix x = random_matrix(rng, 197, 768, Normal{});
  BackwardConfig cfg = BackwardConfig::hot();
  if (state.range(0) == 0) cfg.gw_mode = GwMode::Fp;
  for (auto _ : state) benchmark::DoNotOptimize(hot_gw(gy, x, cfg));
}
BENCHMARK(BM_Gw)->Arg(0)->Arg(1)->ArgName("hot");

}  // namespace

BENCHMARK_MAIN();
