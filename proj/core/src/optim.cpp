#include "netdeconf/optim.hpp"

#include <cmath>
#include <string>

#include "netdeconf/errors.hpp"

namespace netdeconf {

AdamState AdamState::fresh(std::size_t parameter_count, double learning_rate) {
  AdamState s;
  s.m.assign(parameter_count, 0.0);
  s.v.assign(parameter_count, 0.0);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  require_shape(params.size() == grads.size() && state.m.size() == params.size() && state.v.size() == params.size(),
                "adam_step: parameter, gradient and moment sizes differ");
  for (std::size_t k = 0; k < grads.size(); ++k)
    if (!std::isfinite(grads[k])) throw NumericError("adam_step: non-finite gradient at coordinate " + std::to_string(k));

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[k] / correction1;
    const double v_hat = state.v[k] / correction2;
    params[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void adam_step(AdamState& state, ModelParams& params, const ParamGrads& grads) {
  auto flat = params.flatten();
  const auto g = grads.flatten();
  adam_step(state, flat, g);
  params.assign_flat(flat);
}

}  // namespace netdeconf
