// SPDX-License-Identifier: Apache-2.0
// Serial reference vs OpenMP kernels on the default synthetic dataset.
#include <benchmark/benchmark.h>

#include "flowdisagg/kernels.hpp"
#include "flowdisagg/synth.hpp"

using namespace flowdisagg;

namespace {

struct Data {
  std::vector<FeatureWindow> windows;
  DisaggModel model;
  std::vector<ScaledWindow> scaled;
};

const Data& data() {
  static const Data d = [] {
    Data out;
    const SynthData s = synth_generate(SynthConfig{});
    out.windows = build_windows(s.daily_weather, s.daily_flow, s.hourly_weather).windows;
    TrainConfig tc;
    tc.epochs = 0;
    out.model = train(out.windows, tc).model;
    for (const auto& w : out.windows) out.scaled.push_back(scale_window(out.model, w));
    return out;
  }();
  return d;
}

void BM_BatchGradientSerial(benchmark::State& state) {
  const Data& d = data();
  BatchGradient bg(d.model.params, d.scaled.size());
  NetworkParams g = d.model.params.zeros_like();
  for (auto _ : state) {
    benchmark::DoNotOptimize(bg.serial(d.model.params, d.scaled, {1.0, 1.0}, g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.scaled.size()));
}

void BM_BatchGradientParallel(benchmark::State& state) {
  const Data& d = data();
  BatchGradient bg(d.model.params, d.scaled.size());
  NetworkParams g = d.model.params.zeros_like();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(bg.parallel(d.model.params, d.scaled, {1.0, 1.0}, g, threads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.scaled.size()));
}

void BM_DisaggregateSerial(benchmark::State& state) {
  const Data& d = data();
  for (auto _ : state) benchmark::DoNotOptimize(disaggregate_serial(d.model, d.windows));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.windows.size()));
}

void BM_DisaggregateParallel(benchmark::State& state) {
  const Data& d = data();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(disaggregate_parallel(d.model, d.windows, threads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.windows.size()));
}

void thread_counts(benchmark::internal::Benchmark* b) {
  for (int t = 1; t <= std::max(1, available_threads()); t *= 2) b->Arg(t);
  b->Arg(0);  // runtime default
}

}  // namespace

BENCHMARK(BM_BatchGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DisaggregateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DisaggregateParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
