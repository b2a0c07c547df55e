#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "netdeconf/model.hpp"

namespace netdeconf {

struct AdamState {
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState fresh(std::size_t parameter_count, double learning_rate);
};

/// One bias-corrected ADAM update of `params` in place. Throws NumericError
/// naming the first non-finite gradient coordinate; nothing is modified in
/// that case.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Same update on the flattened parameter layout.
void adam_step(AdamState& state, ModelParams& params, const ParamGrads& grads);

}  // namespace netdeconf
