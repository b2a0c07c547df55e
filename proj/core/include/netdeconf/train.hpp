#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "netdeconf/dataset.hpp"
#include "netdeconf/model.hpp"
#include "netdeconf/objective.hpp"

namespace netdeconf {

enum class SplitPart : std::size_t { train = 0, valid = 1, test = 2 };
std::string_view split_part_name(SplitPart part);

/// Disjoint train/valid/test row sets covering every instance (60/20/20).
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;

  const std::vector<std::size_t>& part(SplitPart p) const;

  /// Random 60/20/20 partition in which every part holds both arms; redraws
  /// up to 100 times before throwing DegenerateSplitError.
  static Split random(std::span<const std::uint8_t> treatment, std::uint64_t seed);

  /// Throws on overlap, missing rows, an empty part, or a part without both
  /// treatment arms.
  void validate(std::span<const std::uint8_t> treatment) const;
};

/// Â for the full model, the identity for the network-blind ablation.
SparseMatrix model_adjacency(const Network& net, bool identity);

struct EpochLog {
  std::size_t epoch = 0;
  LossParts parts;
  double valid_mse = 0.0;
  bool sinkhorn_converged = true;
};

struct TrainedModel {
  ModelParams params;          // parameters at the epoch with the best validation factual MSE
  std::vector<EpochLog> history;  // entries 0..epochs; entry e is evaluated before update e
  std::size_t selected_epoch = 0;
  std::size_t sinkhorn_unconverged = 0;
};

/// Full-batch ADAM on the objective. The learner only receives observed
/// data. Throws NumericError on a non-finite loss.
TrainedModel train(const ObservedData& data, const Split& split, const TrainConfig& cfg);

struct SplitMetrics {
  std::size_t count = 0;
  double pehe_sqrt = 0.0;
  double ate_err = 0.0;
  double factual_mse = 0.0;
};

struct MetricsReport {
  std::array<SplitMetrics, 3> splits;
  bool has_ground_truth = false;  // pehe/ate are NaN without it
  std::size_t selected_epoch = 0;
  std::vector<EpochLog> history;

  const SplitMetrics& at(SplitPart p) const { return splits[static_cast<std::size_t>(p)]; }
};

/// Per-split metrics of `params`; τ̂ = ŷ¹ − ŷ⁰ from both heads.
MetricsReport evaluate(const ModelParams& params, const ObservedData& data, const GroundTruth* truth,
                       const Split& split, const TrainConfig& cfg);

struct RunResult {
  TrainedModel model;
  MetricsReport report;
};

/// train() on the observed part, then evaluate() against the ground truth.
RunResult fit_and_evaluate(const NetworkedDataset& dataset, const Split& split, const TrainConfig& cfg);

/// fit_and_evaluate with Â replaced by the identity.
RunResult ablation_no_network(const NetworkedDataset& dataset, const Split& split, TrainConfig cfg);

}  // namespace netdeconf
