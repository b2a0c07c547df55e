#include <benchmark/benchmark.h>

#include "netdeconf/objective.hpp"
#include "netdeconf/simgen.hpp"
#include "netdeconf/train.hpp"

using namespace netdeconf;

namespace {

// One full-batch objective evaluation with and without the backward pass.
void BM_Objective(benchmark::State& state) {
  SimConfig c;
  c.n = static_cast<std::size_t>(state.range(0));
  const auto ds = simulate(c);
  const Split split = Split::random(ds.observed.treatment, 1);
  TrainConfig cfg;
  const SparseMatrix adj = model_adjacency(ds.observed.network, false);
  Rng rng(derive_seed(cfg.seed, 11));
  const ModelParams params = init_params(cfg.architecture(ds.observed.features.cols()), rng);
  const ProblemView view{adj, ds.observed.features, ds.observed.treatment, ds.observed.outcome};
  const bool grads = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(objective(params, view, split.train, cfg, grads).parts.loss);
}
BENCHMARK(BM_Objective)->Args({1000, 0})->Args({1000, 1})->Args({3000, 1})->Unit(benchmark::kMillisecond);

void BM_TrainEpochs(benchmark::State& state) {
  SimConfig c;
  c.n = 1000;
  const auto ds = simulate(c);
  const Split split = Split::random(ds.observed.treatment, 1);
  TrainConfig cfg;
  cfg.epochs = 10;
  for (auto _ : state) benchmark::DoNotOptimize(train(ds.observed, split, cfg).selected_epoch);
}
BENCHMARK(BM_TrainEpochs)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace
