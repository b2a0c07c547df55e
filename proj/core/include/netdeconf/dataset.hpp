#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "netdeconf/graph.hpp"
#include "netdeconf/matrix.hpp"
#include "netdeconf/sparse.hpp"

namespace netdeconf {

/// Everything a learner may see: features, network, treatments and factual
/// outcomes.
struct ObservedData {
  SparseMatrix features;               // n×m bag-of-words counts
  Network network;
  std::vector<std::uint8_t> treatment;  // t_i ∈ {0, 1}
  std::vector<double> outcome;          // factual y_i

  std::size_t size() const noexcept { return treatment.size(); }
  /// Throws ShapeError/std::invalid_argument on inconsistent sizes or
  /// treatments outside {0, 1}.
  void validate() const;
};

/// Simulation ground truth; never handed to training code.
struct GroundTruth {
  std::vector<double> counterfactual;  // y_i^{CF}, the outcome under 1 − t_i
  std::vector<double> mu0;             // noiseless E[y⁰]
  std::vector<double> mu1;             // noiseless E[y¹]
  std::vector<double> prob_treated;    // Pr(t = 1 | x_i, A)

  /// τ_i = y¹_i − y⁰_i from the factual/counterfactual pair.
  std::vector<double> ite(const ObservedData& observed) const;
};

struct NetworkedDataset {
  ObservedData observed;
  std::optional<GroundTruth> truth;
  /// Hidden topic mixtures r(x_i); empty when loaded from disk.
  DenseMatrix topics;
};

}  // namespace netdeconf
