#include "netdeconf/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "netdeconf/errors.hpp"

namespace netdeconf {

Architecture TrainConfig::architecture(std::size_t features) const {
  return Architecture{features, gcn_layers, out_layers, rep_dim, hidden_units};
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("TrainConfig." + field + " " + why);
  };
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha", "must be finite and >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda", "must be finite and >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate", "must be finite and > 0");
  if (gcn_layers == 0) fail("gcn_layers", "must be >= 1");
  if (out_layers == 0) fail("out_layers", "must be >= 1");
  if (rep_dim == 0) fail("rep_dim", "must be >= 1");
  if (hidden_units == 0) fail("hidden_units", "must be >= 1");
  if (!(sinkhorn.entropic_reg > 0.0)) fail("sinkhorn.entropic_reg", "must be > 0");
  if (sinkhorn.max_iters == 0) fail("sinkhorn.max_iters", "must be >= 1");
}

ObjectiveResult objective(const ModelParams& params, const ProblemView& problem, std::span<const std::size_t> train_rows,
                          const TrainConfig& cfg, bool with_gradients, SinkhornPotentials* warm_start) {
  const std::size_t n = problem.treatment.size();
  require_shape(problem.outcome.size() == n, "objective: outcome/treatment length mismatch");
  require_shape(!train_rows.empty(), "objective: no training rows");

  std::vector<std::size_t> treated, control;
  for (std::size_t i : train_rows) {
    require_shape(i < n, "objective: training row out of range");
    (problem.treatment[i] ? treated : control).push_back(i);
  }
  if (treated.empty() || control.empty())
    throw DegenerateSplitError("objective: degenerate split, training rows contain " + std::to_string(treated.size()) +
                               " treated and " + std::to_string(control.size()) + " control instances");

  ObjectiveResult result;
  auto fwd = forward(params, problem.adjacency, problem.features, problem.treatment);
  result.predictions = std::move(fwd.predictions);

  const double inv_count = 1.0 / static_cast<double>(train_rows.size());
  std::vector<double> grad_pred(n, 0.0);
  double sq = 0.0;
  for (std::size_t i : train_rows) {
    const double residual = result.predictions[i] - problem.outcome[i];
    sq += residual * residual;
    grad_pred[i] = 2.0 * residual * inv_count;
  }
  result.parts.mse = sq / static_cast<double>(train_rows.size());

  const DenseMatrix& reps = fwd.trace.representations();
  const bool balance_grads = with_gradients && cfg.alpha > 0.0;
  const auto w = wasserstein1(GroupedReps{gather_rows(reps, treated), gather_rows(reps, control)}, cfg.sinkhorn,
                              balance_grads, warm_start);
  result.parts.ipm = w.distance;
  result.sinkhorn_converged = w.converged;
  result.sinkhorn_iterations = w.iterations;

  result.parts.l2 = params.squared_norm();
  result.parts.loss = result.parts.mse + cfg.alpha * result.parts.ipm + cfg.lambda * result.parts.l2;
  if (!with_gradients) return result;

  DenseMatrix grad_reps;
  if (balance_grads) {
    grad_reps = DenseMatrix(reps.rows(), reps.cols());
    DenseMatrix gt = w.grad_treated;
    DenseMatrix gc = w.grad_control;
    for (double& v : gt.values()) v *= cfg.alpha;
    for (double& v : gc.values()) v *= cfg.alpha;
    scatter_add_rows(grad_reps, treated, gt);
    scatter_add_rows(grad_reps, control, gc);
  }
  result.grads = backward(params, fwd.trace, grad_pred, grad_reps);
  if (cfg.lambda > 0.0) result.grads.axpy(2.0 * cfg.lambda, params);
  return result;
}

}  // namespace netdeconf
