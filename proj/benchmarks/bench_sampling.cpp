#include <benchmark/benchmark.h>

#include "fairsample/sampling.hpp"
#include "fairsample/scoring.hpp"
#include "fairsample/synth.hpp"

using namespace fairsample;

namespace {

Manifest make(std::size_t per_group) {
  SynthConfig cfg;
  cfg.seed = 1;
  cfg.identities_per_group.assign(4, per_group);
  cfg.images_min = 1;
  cfg.images_max = 8;
  cfg.concentration = {2.0, 6.0, 8.0, 10.0};
  return generate(cfg);
}

void BM_SampleProtocol(benchmark::State& state) {
  const auto m = make(static_cast<std::size_t>(state.range(0)));
  const auto z = m.identities().size() / 8;
  for (auto _ : state) benchmark::DoNotOptimize(sample_protocol(m, Protocol::C, z));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SampleProtocol)->RangeMultiplier(4)->Range(64, 4096)->Unit(benchmark::kMillisecond);

void BM_SampleNaive(benchmark::State& state) {
  const auto m = make(static_cast<std::size_t>(state.range(0)));
  const auto z = m.identities().size() / 8;
  for (auto _ : state) benchmark::DoNotOptimize(sample_naive(m, Protocol::C, z));
}
BENCHMARK(BM_SampleNaive)->RangeMultiplier(4)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_ComputeEs(benchmark::State& state) {
  const auto m = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_es(m, Protocol::B));
}
BENCHMARK(BM_ComputeEs)->RangeMultiplier(4)->Range(64, 4096);

}  // namespace
BENCHMARK_MAIN();
