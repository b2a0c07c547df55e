#include "netdeconf/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "netdeconf/errors.hpp"
#include "netdeconf/graph.hpp"
#include "netdeconf/metrics.hpp"
#include "netdeconf/optim.hpp"
#include "netdeconf/rng.hpp"

namespace netdeconf {

namespace {

constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kSplitStream = 12;

bool has_both_arms(const std::vector<std::size_t>& rows, std::span<const std::uint8_t> t) {
  bool treated = false, control = false;
  for (std::size_t i : rows) (t[i] ? treated : control) = true;
  return treated && control;
}

double factual_mse(std::span<const double> pred, std::span<const double> y, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double sq = 0.0;
  for (std::size_t i : rows) {
    const double r = pred[i] - y[i];
    sq += r * r;
  }
  return sq / static_cast<double>(rows.size());
}

}  // namespace

std::string_view split_part_name(SplitPart part) {
  switch (part) {
    case SplitPart::train: return "train";
    case SplitPart::valid: return "valid";
    case SplitPart::test: return "test";
  }
  return "?";
}

const std::vector<std::size_t>& Split::part(SplitPart p) const {
  switch (p) {
    case SplitPart::train: return train;
    case SplitPart::valid: return valid;
    case SplitPart::test: return test;
  }
  return test;
}

Split Split::random(std::span<const std::uint8_t> treatment, std::uint64_t seed) {
  const std::size_t n = treatment.size();
  if (n < 3) throw DegenerateSplitError("split: need at least 3 instances, got " + std::to_string(n));
  const auto n_train = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  Rng rng(seed, kSplitStream);
  std::vector<std::size_t> order(n);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    Split s;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.valid.begin(), s.valid.end());
    std::sort(s.test.begin(), s.test.end());
    if (!s.train.empty() && !s.valid.empty() && !s.test.empty() && has_both_arms(s.train, treatment) &&
        has_both_arms(s.valid, treatment) && has_both_arms(s.test, treatment))
      return s;
  }
  throw DegenerateSplitError("split: could not draw a split with both treatment arms in every part");
}

void Split::validate(std::span<const std::uint8_t> treatment) const {
  const std::size_t n = treatment.size();
  std::vector<std::uint8_t> seen(n, 0);
  for (SplitPart p : {SplitPart::train, SplitPart::valid, SplitPart::test}) {
    const auto& rows = part(p);
    const std::string name(split_part_name(p));
    if (rows.empty()) throw DegenerateSplitError("split: " + name + " part is empty");
    for (std::size_t i : rows) {
      require_shape(i < n, "split: row " + std::to_string(i) + " out of range");
      if (seen[i]++) throw std::invalid_argument("split: row " + std::to_string(i) + " appears twice");
    }
    if (!has_both_arms(rows, treatment))
      throw DegenerateSplitError("split: " + name + " part lacks a treatment arm");
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument("split: parts do not cover every row");
}

SparseMatrix model_adjacency(const Network& net, bool identity) {
  return identity ? SparseMatrix::identity(net.node_count()) : normalize_adjacency(net);
}

TrainedModel train(const ObservedData& data, const Split& split, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  split.validate(data.treatment);

  const SparseMatrix adjacency = model_adjacency(data.network, cfg.identity_adjacency);
  const ProblemView problem{adjacency, data.features, data.treatment, data.outcome};

  Rng init_rng(cfg.seed, kInitStream);
  TrainedModel out;
  ModelParams params = init_params(cfg.architecture(data.features.cols()), init_rng);
  AdamState adam = AdamState::fresh(params.parameter_count(), cfg.learning_rate);
  SinkhornPotentials warm;
  double best_valid = std::numeric_limits<double>::infinity();
  out.params = params;
  out.history.reserve(cfg.epochs + 1);

  for (std::size_t epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const bool step = epoch < cfg.epochs;
    auto obj = objective(params, problem, split.train, cfg, step, &warm);
    if (!std::isfinite(obj.parts.loss))
      throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + " (mse " +
                         std::to_string(obj.parts.mse) + ", ipm " + std::to_string(obj.parts.ipm) + ")");
    EpochLog log;
    log.epoch = epoch;
    log.parts = obj.parts;
    log.valid_mse = factual_mse(obj.predictions, data.outcome, split.valid);
    log.sinkhorn_converged = obj.sinkhorn_converged;
    if (!obj.sinkhorn_converged) ++out.sinkhorn_unconverged;
    out.history.push_back(log);
    if (log.valid_mse < best_valid) {
      best_valid = log.valid_mse;
      out.params = params;
      out.selected_epoch = epoch;
    }
    if (cfg.patience > 0 && epoch - out.selected_epoch >= cfg.patience) break;
    if (step) adam_step(adam, params, obj.grads);
  }
  return out;
}

MetricsReport evaluate(const ModelParams& params, const ObservedData& data, const GroundTruth* truth,
                       const Split& split, const TrainConfig& cfg) {
  const SparseMatrix adjacency = model_adjacency(data.network, cfg.identity_adjacency);
  const DenseMatrix reps = encode(params, adjacency, data.features);
  const auto both = predict_both(params, reps);
  const std::size_t n = data.size();
  std::vector<double> factual(n), tau_hat(n);
  for (std::size_t i = 0; i < n; ++i) {
    factual[i] = both[data.treatment[i]][i];
    tau_hat[i] = both[1][i] - both[0][i];
  }
  const std::vector<double> tau = truth ? truth->ite(data) : std::vector<double>{};

  MetricsReport report;
  report.has_ground_truth = truth != nullptr;
  for (SplitPart p : {SplitPart::train, SplitPart::valid, SplitPart::test}) {
    const auto& rows = split.part(p);
    SplitMetrics& m = report.splits[static_cast<std::size_t>(p)];
    m.count = rows.size();
    m.factual_mse = factual_mse(factual, data.outcome, rows);
    if (truth && !rows.empty()) {
      std::vector<double> est, actual;
      est.reserve(rows.size());
      actual.reserve(rows.size());
      for (std::size_t i : rows) {
        est.push_back(tau_hat[i]);
        actual.push_back(tau[i]);
      }
      const auto e = effect_metrics(est, actual);
      m.pehe_sqrt = e.pehe_sqrt;
      m.ate_err = e.ate_err;
    } else {
      m.pehe_sqrt = std::numeric_limits<double>::quiet_NaN();
      m.ate_err = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return report;
}

RunResult fit_and_evaluate(const NetworkedDataset& dataset, const Split& split, const TrainConfig& cfg) {
  RunResult r;
  r.model = train(dataset.observed, split, cfg);
  r.report = evaluate(r.model.params, dataset.observed, dataset.truth ? &*dataset.truth : nullptr, split, cfg);
  r.report.selected_epoch = r.model.selected_epoch;
  r.report.history = r.model.history;
  return r;
}

RunResult ablation_no_network(const NetworkedDataset& dataset, const Split& split, TrainConfig cfg) {
  cfg.identity_adjacency = true;
  return fit_and_evaluate(dataset, split, cfg);
}

}  // namespace netdeconf
