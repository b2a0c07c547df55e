#include <benchmark/benchmark.h>

#include "netdeconf/balance.hpp"
#include "netdeconf/graph.hpp"
#include "netdeconf/rng.hpp"
#include "netdeconf/simgen.hpp"

using namespace netdeconf;

namespace {

DenseMatrix random_dense(Rng& rng, std::size_t n, std::size_t d) {
  DenseMatrix m(n, d);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

// Â of a generated network plus a dense right-hand side.
void BM_Spmm(benchmark::State& state) {
  SimConfig c;
  c.n = static_cast<std::size_t>(state.range(0));
  c.topics = 10;
  c.vocab = 50;
  c.words_per_doc = 20;
  const auto ds = simulate(c);
  const SparseMatrix a = normalize_adjacency(ds.observed.network);
  Rng rng(1);
  const DenseMatrix h = random_dense(rng, c.n, 100);
  for (auto _ : state) benchmark::DoNotOptimize(spmm(a, h));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.nnz()) * 100);
}
BENCHMARK(BM_Spmm)->Arg(1000)->Arg(3000)->Unit(benchmark::kMicrosecond);

void BM_SpmmFeatures(benchmark::State& state) {
  SimConfig c;
  c.n = static_cast<std::size_t>(state.range(0));
  const auto ds = simulate(c);
  Rng rng(2);
  const DenseMatrix w = random_dense(rng, ds.observed.features.cols(), 100);
  for (auto _ : state) benchmark::DoNotOptimize(spmm(ds.observed.features, w));
}
BENCHMARK(BM_SpmmFeatures)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Sinkhorn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const DenseMatrix a = random_dense(rng, n, 100), b = random_dense(rng, n + n / 3, 100);
  const bool grads = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein1({a, b}, {}, grads).distance);
}
BENCHMARK(BM_Sinkhorn)->Args({200, 0})->Args({200, 1})->Args({900, 0})->Args({900, 1})->Unit(benchmark::kMillisecond);

void BM_SinkhornWarm(benchmark::State& state) {
  Rng rng(4);
  const DenseMatrix a = random_dense(rng, 900, 100), b = random_dense(rng, 1200, 100);
  SinkhornPotentials warm;
  wasserstein1({a, b}, {}, true, &warm);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein1({a, b}, {}, true, &warm).distance);
}
BENCHMARK(BM_SinkhornWarm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
