#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "netdeconf/balance.hpp"
#include "netdeconf/model.hpp"
#include "netdeconf/sparse.hpp"

namespace netdeconf {

/// Hyperparameters of one training run.
struct TrainConfig {
  double alpha = 1e-4;   // weight of the representation-balancing penalty
  double lambda = 1e-4;  // weight of the squared ℓ₂ norm of all parameters
  double learning_rate = 1e-2;
  std::size_t epochs = 200;
  /// Stop once this many epochs pass without a better validation MSE; 0 runs every epoch.
  std::size_t patience = 0;
  std::size_t gcn_layers = 2;
  std::size_t out_layers = 2;
  std::size_t rep_dim = 100;
  std::size_t hidden_units = 100;
  std::uint64_t seed = 0;
  /// Replace Â with the identity: the network-blind ablation.
  bool identity_adjacency = false;
  SinkhornConfig sinkhorn;

  Architecture architecture(std::size_t features) const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Inputs of the training objective. Only observed quantities appear here.
struct ProblemView {
  const SparseMatrix& adjacency;
  const SparseMatrix& features;
  std::span<const std::uint8_t> treatment;
  std::span<const double> outcome;
};

struct LossParts {
  double loss = 0.0;
  double mse = 0.0;  // factual MSE over the training rows
  double ipm = 0.0;  // Wasserstein-1 between treated and control training representations
  double l2 = 0.0;   // ‖θ‖²
};

struct ObjectiveResult {
  LossParts parts;
  ParamGrads grads;                 // empty unless gradients were requested
  std::vector<double> predictions;  // factual predictions for every node
  bool sinkhorn_converged = true;
  std::size_t sinkhorn_iterations = 0;
};

/// mse + α·ipm + λ·‖θ‖² over `train_rows`, with message passing over the
/// whole graph. Throws DegenerateSplitError when the training rows miss a
/// treatment arm.
ObjectiveResult objective(const ModelParams& params, const ProblemView& problem, std::span<const std::size_t> train_rows,
                          const TrainConfig& cfg, bool with_gradients = true, SinkhornPotentials* warm_start = nullptr);

}  // namespace netdeconf
