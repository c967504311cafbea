// Wall-time microbenchmarks of the decision units on surrogate statistics.
// These complement the exact add-count accounting with machine timings.

#include <benchmark/benchmark.h>

#include <random>

#include "uwbdet/acr.hpp"
#include "uwbdet/detectors.hpp"

using namespace uwbdet;
using namespace uwbdet::detectors;

namespace {

acr::DirectZParams operating_point() {
  // Roughly the 10 dB regime used in the complexity comparisons.
  acr::DirectZParams p;
  p.e_cap = 0.8;
  p.var_sn = 0.08;
  p.var_nn = 0.17;
  return p;
}

acr::ZMatrix surrogate_block(int l, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  waveform::SymbolSeq b(l + 1);
  for (auto& s : b) s = (rng() & 1u) ? int8_t{-1} : int8_t{1};
  b[0] = 1;
  return acr::model_z_matrix(b, operating_point(), seed);
}

acr::ZBand surrogate_band(int n, int l, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  waveform::SymbolSeq b(n + 1);
  for (auto& s : b) s = (rng() & 1u) ? int8_t{-1} : int8_t{1};
  b[0] = 1;
  return acr::model_z_band(b, l, operating_point(), seed);
}

void BM_SphereDecoder(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const DetectorOptions opts{state.range(1) != 0, InitialRadius::kInfinite,
                             state.range(2) != 0};
  std::vector<acr::ZMatrix> blocks;
  for (int i = 0; i < 64; ++i) blocks.push_back(surrogate_block(l, 1000 + i));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(msdd_sd(blocks[i++ & 63], opts));
  }
}
// args: L, use_stopping_radius, sort_input
BENCHMARK(BM_SphereDecoder)
    ->Args({5, 1, 1})
    ->Args({10, 1, 1})
    ->Args({10, 1, 0})
    ->Args({10, 0, 1})
    ->Args({15, 1, 1});

void BM_BruteForce(benchmark::State& state) {
  const auto z = surrogate_block(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(msdd_bruteforce(z));
}
BENCHMARK(BM_BruteForce)->Arg(5)->Arg(10);

void BM_BlockDfdd(benchmark::State& state) {
  const auto z = surrogate_block(static_cast<int>(state.range(0)), 11);
  for (auto _ : state) benchmark::DoNotOptimize(bdfdd(z));
}
BENCHMARK(BM_BlockDfdd)->Arg(5)->Arg(10)->Arg(15);

void BM_SortedBlockDfdd(benchmark::State& state) {
  const auto z = surrogate_block(static_cast<int>(state.range(0)), 13);
  for (auto _ : state) benchmark::DoNotOptimize(sbdfdd(z));
}
BENCHMARK(BM_SortedBlockDfdd)->Arg(5)->Arg(10)->Arg(15);

void BM_ContinuousDfdd(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto band = surrogate_band(100, l, 17);
  for (auto _ : state) benchmark::DoNotOptimize(cdfdd(band, l));
}
BENCHMARK(BM_ContinuousDfdd)->Arg(5)->Arg(10);

void BM_Viterbi(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto band = surrogate_band(100, l, 19);
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(band, l));
}
BENCHMARK(BM_Viterbi)->Arg(3)->Arg(5)->Arg(10);

void BM_DetectBurst(benchmark::State& state) {
  const auto band = surrogate_band(100, 10, 23);
  const auto kind = static_cast<DetectorKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(detect_burst(band, kind, 10));
}
BENCHMARK(BM_DetectBurst)
    ->Arg(static_cast<int>(DetectorKind::kDd))
    ->Arg(static_cast<int>(DetectorKind::kMsdd))
    ->Arg(static_cast<int>(DetectorKind::kSbdfdd))
    ->Arg(static_cast<int>(DetectorKind::kCdfdd));

}  // namespace

BENCHMARK_MAIN();
