// Serial reference path vs OpenMP path for the batch kernels.
// Arg 0 selects Execution::Serial, 1 selects Execution::Parallel.

#include "kmgl/clustering.hpp"
#include "kmgl/evaluation.hpp"
#include "kmgl/synth.hpp"

#include <benchmark/benchmark.h>

using namespace kmgl;

namespace {

const SyntheticDataset& dataset() {
  static const SyntheticDataset ds = [] {
    SynthConfig cfg;
    cfg.n = 40;
    cfg.m = 2000;
    cfg.clusters = 4;
    cfg.seed = 1;
    return generate(cfg);
  }();
  return ds;
}

Execution mode(const benchmark::State& state) { return state.range(0) == 0 ? Execution::Serial : Execution::Parallel; }

const FilterParams kParams{1e-2, 1e-2};

void BM_ApplyAll(benchmark::State& state) {
  const auto& ds = dataset();
  const LowpassOperator op(ds.kernels[0], ds.truth_graphs[0], kParams);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply_all(ds.signals.X, mode(state)));
}

void BM_MaskedFilterAll(benchmark::State& state) {
  static const SyntheticDataset masked = [] {
    SynthConfig cfg;
    cfg.n = 40;
    cfg.m = 2000;
    cfg.clusters = 4;
    cfg.missing_rate = 0.2;
    cfg.seed = 1;
    return generate(cfg);
  }();
  for (auto _ : state) {
    benchmark::DoNotOptimize(masked_filter_all(masked.signals.X, masked.signals.masks, masked.kernels[0],
                                               masked.truth_graphs[0], kParams, mode(state)));
  }
}

void BM_BuildQp(benchmark::State& state) {
  const auto& ds = dataset();
  for (auto _ : state) benchmark::DoNotOptimize(build_qp(ds.signals.X, 1e-2, 1e-4, mode(state)));
}

void BM_SimilarityMatrix(benchmark::State& state) {
  const auto& ds = dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(similarity_matrix(ds.signals, ds.truth_graphs, ds.kernels, kParams, mode(state)));
  }
}

void BM_KMeans(benchmark::State& state) {
  const auto& ds = dataset();
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(ds.signals.X, 4, 7, 300, mode(state)));
}

void BM_Fit(benchmark::State& state) {
  const auto& ds = dataset();
  FitOptions opts;
  opts.filter = kParams;
  opts.clusters = 4;
  opts.seed = 3;
  opts.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(fit(ds.signals, ds.kernels, opts));
}

}  // namespace

BENCHMARK(BM_ApplyAll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaskedFilterAll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildQp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimilarityMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeans)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Fit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
