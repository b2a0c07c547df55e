#include "netdeconf/cli/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "netdeconf/graph.hpp"
#include "netdeconf/objective.hpp"
#include "netdeconf/rng.hpp"

namespace netdeconf::cli {

namespace {

constexpr double kStep = 1e-5;
// Relative errors are taken against max(|analytic|, |numeric|, floor).
constexpr double kFloor = 1e-6;

struct Instance {
  SparseMatrix adjacency;
  SparseMatrix features;
  std::vector<std::uint8_t> treatment;
  std::vector<double> outcome;
  std::vector<std::size_t> train_rows;
  ModelParams params;
  TrainConfig cfg;
};

Instance make_instance(Rng& rng) {
  Instance in;
  const std::size_t n = 6 + rng.below(7);
  const std::size_t m = 2 + rng.below(5);
  in.cfg.alpha = 1e-3;
  in.cfg.lambda = 1e-4;
  in.cfg.gcn_layers = 1 + rng.below(2);
  in.cfg.out_layers = 1 + rng.below(2);
  in.cfg.rep_dim = 2 + rng.below(3);
  in.cfg.hidden_units = 2 + rng.below(3);
  in.cfg.sinkhorn.max_iters = 100000;
  in.cfg.sinkhorn.convergence_tol = 1e-13;

  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (rng.bernoulli(0.6)) triplets.push_back({i, j, static_cast<double>(1 + rng.below(4))});
  in.features = SparseMatrix::from_triplets(n, m, std::move(triplets));

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.3)) edges.emplace_back(i, j);
  in.adjacency = normalize_adjacency(Network(n, edges));

  in.treatment.resize(n);
  for (auto& t : in.treatment) t = rng.bernoulli(0.5) ? 1 : 0;
  in.treatment[0] = 1;
  in.treatment[1] = 0;
  in.outcome.resize(n);
  for (double& y : in.outcome) y = rng.normal(0.0, 2.0);
  // Two rows stay out of the loss but still pass messages.
  for (std::size_t i = 0; i < n; ++i)
    if (i < 2 || i >= 4) in.train_rows.push_back(i);

  in.params = init_params(in.cfg.architecture(m), rng);
  auto jitter = [&](std::vector<DenseLayer>& layers) {
    for (auto& layer : layers)
      for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
  };
  jitter(in.params.encoder);
  jitter(in.params.heads[0]);
  jitter(in.params.heads[1]);
  return in;
}

// Signs of every ReLU input of a forward pass.
std::vector<bool> relu_pattern(const ModelParams& params, const Instance& in) {
  const auto fwd = forward(params, in.adjacency, in.features, in.treatment);
  std::vector<bool> signs;
  for (const auto& z : fwd.trace.encoder_pre)
    for (double v : z.values()) signs.push_back(v > 0.0);
  for (const auto& head : fwd.trace.head_pre)
    for (std::size_t k = 0; k + 1 < head.size(); ++k)
      for (double v : head[k].values()) signs.push_back(v > 0.0);
  return signs;
}

}  // namespace

std::vector<GradcheckInstance> run_gradcheck(std::uint64_t seed, std::size_t instances) {
  std::vector<GradcheckInstance> out;
  for (std::size_t k = 0; k < instances; ++k) {
    Rng rng(derive_seed(seed, k), 21);
    const Instance in = make_instance(rng);
    const ProblemView problem{in.adjacency, in.features, in.treatment, in.outcome};
    const auto analytic = objective(in.params, problem, in.train_rows, in.cfg).grads.flatten();
    const auto theta = in.params.flatten();
    const auto base_pattern = relu_pattern(in.params, in);

    GradcheckInstance report;
    report.n = in.treatment.size();
    report.features = in.features.cols();
    report.rep_dim = in.cfg.rep_dim;
    report.out_layers = in.cfg.out_layers;
    report.gcn_layers = in.cfg.gcn_layers;
    ModelParams probe = in.params;
    std::vector<double> shifted = theta;
    for (std::size_t c = 0; c < theta.size(); ++c) {
      double value[2];
      bool kink = false;
      for (int side = 0; side < 2; ++side) {
        shifted[c] = theta[c] + (side == 0 ? kStep : -kStep);
        probe.assign_flat(shifted);
        kink = kink || relu_pattern(probe, in) != base_pattern;
        value[side] = objective(probe, problem, in.train_rows, in.cfg, false).parts.loss;
      }
      shifted[c] = theta[c];
      if (kink) {
        ++report.skipped;
        continue;
      }
      const double numeric = (value[0] - value[1]) / (2.0 * kStep);
      const double denom = std::max({std::abs(analytic[c]), std::abs(numeric), kFloor});
      report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic[c] - numeric) / denom);
      ++report.checked;
    }
    out.push_back(report);
  }
  return out;
}

}  // namespace netdeconf::cli
