#include "netdeconf/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "netdeconf/errors.hpp"

namespace netdeconf {

void ObservedData::validate() const {
  const std::size_t n = treatment.size();
  require_shape(outcome.size() == n, "dataset: " + std::to_string(outcome.size()) + " outcomes for " +
                                         std::to_string(n) + " treatments");
  require_shape(features.rows() == n, "dataset: feature matrix has " + std::to_string(features.rows()) +
                                          " rows, expected " + std::to_string(n));
  require_shape(network.node_count() == n, "dataset: network has " + std::to_string(network.node_count()) +
                                               " nodes, expected " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (treatment[i] > 1) throw std::invalid_argument("dataset: treatment of node " + std::to_string(i) + " is not 0/1");
    if (!std::isfinite(outcome[i])) throw NumericError("dataset: non-finite outcome at node " + std::to_string(i));
  }
}

std::vector<double> GroundTruth::ite(const ObservedData& observed) const {
  const std::size_t n = observed.size();
  require_shape(counterfactual.size() == n, "ground truth: counterfactual length mismatch");
  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double treated = observed.treatment[i] ? observed.outcome[i] : counterfactual[i];
    const double control = observed.treatment[i] ? counterfactual[i] : observed.outcome[i];
    tau[i] = treated - control;
  }
  return tau;
}

}  // namespace netdeconf
