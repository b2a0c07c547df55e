#include "netdeconf/metrics.hpp"

#include <cmath>

#include "netdeconf/errors.hpp"

namespace netdeconf {

EffectErrors effect_metrics(std::span<const double> tau_hat, std::span<const double> tau) {
  require_shape(tau_hat.size() == tau.size() && !tau.empty(), "effect_metrics: need two equal-length non-empty vectors");
  double sq = 0.0, sum_hat = 0.0, sum_true = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double diff = tau_hat[i] - tau[i];
    sq += diff * diff;
    sum_hat += tau_hat[i];
    sum_true += tau[i];
  }
  const auto n = static_cast<double>(tau.size());
  return {std::sqrt(sq / n), std::abs(sum_hat / n - sum_true / n)};
}

}  // namespace netdeconf
