#pragma once

#include <span>

namespace netdeconf {

struct EffectErrors {
  double pehe_sqrt = 0.0;  // √(mean((τ̂ − τ)²))
  double ate_err = 0.0;    // |mean(τ̂) − mean(τ)|
};

/// Throws ShapeError on length mismatch or empty input.
EffectErrors effect_metrics(std::span<const double> tau_hat, std::span<const double> tau);

}  // namespace netdeconf
