#include "netdeconf/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "netdeconf/errors.hpp"

namespace netdeconf {

namespace {

enum Stream : std::uint64_t {
  kTopicStream = 1,
  kFeatureStream = 2,
  kNetworkStream = 3,
  kTreatmentStream = 4,
  kOutcomeStream = 5,
};

void dirichlet_row(std::span<double> out, double alpha, Rng& rng) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double& v : out) {
    v = rng.log_gamma_variate(alpha);
    peak = std::max(peak, v);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : out) v /= total;
}

std::vector<double> cumulative(std::span<const double> weights) {
  std::vector<double> cum(weights.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    cum[k] = acc;
  }
  return cum;
}

std::size_t draw_categorical(const std::vector<double>& cum, Rng& rng) {
  const double u = rng.uniform() * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace

void SimConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("SimConfig." + field + " " + why);
  };
  if (n < 2) fail("n", "must be at least 2");
  if (topics == 0) fail("topics", "must be positive");
  if (vocab == 0) fail("vocab", "must be positive");
  if (words_per_doc == 0) fail("words_per_doc", "must be positive");
  if (!(kappa1 >= 0.0) || !std::isfinite(kappa1)) fail("kappa1", "must be finite and >= 0");
  if (!(kappa2 >= 0.0) || !std::isfinite(kappa2)) fail("kappa2", "must be finite and >= 0");
  if (!(outcome_scale > 0.0) || !std::isfinite(outcome_scale)) fail("outcome_scale", "must be finite and > 0");
  if (!(dirichlet_alpha > 0.0)) fail("dirichlet_alpha", "must be > 0");
  if (!(topic_word_alpha > 0.0)) fail("topic_word_alpha", "must be > 0");
  if (!std::isfinite(homophily)) fail("homophily", "must be finite");
  if (!(target_degree >= 0.0) || target_degree > static_cast<double>(n - 1))
    fail("target_degree", "must be in [0, n-1]");
  if (!(noise_std >= 0.0)) fail("noise_std", "must be >= 0");
}

TopicModel gen_topics(const SimConfig& cfg, Rng& rng) {
  TopicModel model{DenseMatrix(cfg.n, cfg.topics), DenseMatrix(cfg.topics, cfg.vocab)};
  for (std::size_t i = 0; i < cfg.n; ++i) dirichlet_row(model.mixtures.row(i), cfg.dirichlet_alpha, rng);
  for (std::size_t k = 0; k < cfg.topics; ++k) dirichlet_row(model.topic_word.row(k), cfg.topic_word_alpha, rng);
  return model;
}

SparseMatrix gen_features(const DenseMatrix& mixtures, const DenseMatrix& topic_word, const SimConfig& cfg, Rng& rng) {
  require_shape(mixtures.cols() == topic_word.rows(), "gen_features: topic count mismatch");
  const std::size_t vocab = topic_word.cols();
  std::vector<std::vector<double>> word_cum;
  word_cum.reserve(topic_word.rows());
  for (std::size_t k = 0; k < topic_word.rows(); ++k) word_cum.push_back(cumulative(topic_word.row(k)));

  std::vector<Triplet> triplets;
  std::vector<std::uint32_t> counts(vocab, 0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < mixtures.rows(); ++i) {
    const auto topic_cum = cumulative(mixtures.row(i));
    touched.clear();
    for (std::size_t w = 0; w < cfg.words_per_doc; ++w) {
      const std::size_t topic = draw_categorical(topic_cum, rng);
      const std::size_t word = draw_categorical(word_cum[topic], rng);
      if (counts[word]++ == 0) touched.push_back(word);
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t word : touched) {
      triplets.push_back({i, word, static_cast<double>(counts[word])});
      counts[word] = 0;
    }
  }
  return SparseMatrix::from_triplets(mixtures.rows(), vocab, std::move(triplets));
}

Network gen_network(const DenseMatrix& mixtures, const SimConfig& cfg, Rng& rng) {
  const std::size_t n = mixtures.rows();
  const std::size_t pairs = n * (n - 1) / 2;
  std::vector<double> weight;
  weight.reserve(pairs);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::exp(cfg.homophily * dot(mixtures.row(i), mixtures.row(j)));
      weight.push_back(w);
      total += w;
    }
  }
  const double target_edges = 0.5 * cfg.target_degree * static_cast<double>(n);
  double scale = total > 0.0 ? target_edges / total : 0.0;
  // Probabilities are capped at 1; push the scale up until the capped
  // expectation meets the target.
  for (int iter = 0; iter < 100 && target_edges > 0.0; ++iter) {
    double expected = 0.0;
    for (double w : weight) expected += std::min(1.0, scale * w);
    if (std::abs(expected - target_edges) <= 1e-9 * target_edges || expected >= static_cast<double>(pairs)) break;
    scale *= target_edges / expected;
  }

  std::vector<Edge> edges;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j, ++k)
      if (rng.uniform() < std::min(1.0, scale * weight[k])) edges.emplace_back(i, j);
  return Network(n, edges);
}

Centroids pick_centroids(const DenseMatrix& mixtures, Rng& rng) {
  require_shape(mixtures.rows() > 0, "pick_centroids: no instances");
  Centroids c;
  const auto chosen = mixtures.row(rng.below(mixtures.rows()));
  c.treated.assign(chosen.begin(), chosen.end());
  c.control = column_sums(mixtures);
  for (double& v : c.control) v /= static_cast<double>(mixtures.rows());
  return c;
}

double treatment_probability(double p0, double p1) {
  const double diff = p1 - p0;
  double prob;
  if (diff >= 0.0) {
    prob = 1.0 / (1.0 + std::exp(-diff));
  } else {
    const double e = std::exp(diff);
    prob = e / (1.0 + e);
  }
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(prob, lo, hi);
}

TreatmentDraw assign_treatments(const DenseMatrix& mixtures, const Network& net, const Centroids& centroids,
                                const SimConfig& cfg, Rng& rng) {
  require_shape(mixtures.rows() == net.node_count(), "assign_treatments: node count mismatch");
  require_shape(centroids.treated.size() == mixtures.cols() && centroids.control.size() == mixtures.cols(),
                "assign_treatments: centroid width mismatch");
  const std::size_t n = mixtures.rows();
  const DenseMatrix neighborhood = neighbor_sum(net, mixtures);
  TreatmentDraw d;
  d.t.resize(n);
  d.prob_treated.resize(n);
  d.p0.resize(n);
  d.p1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.p1[i] = cfg.kappa1 * dot(mixtures.row(i), centroids.treated) +
              cfg.kappa2 * dot(neighborhood.row(i), centroids.treated);
    d.p0[i] = cfg.kappa1 * dot(mixtures.row(i), centroids.control) +
              cfg.kappa2 * dot(neighborhood.row(i), centroids.control);
    d.prob_treated[i] = treatment_probability(d.p0[i], d.p1[i]);
    d.t[i] = rng.bernoulli(d.prob_treated[i]) ? 1 : 0;
  }
  return d;
}

OutcomeDraw outcomes_from_noise(std::span<const double> p0, std::span<const double> p1,
                                std::span<const std::uint8_t> t, double outcome_scale,
                                std::span<const double> noise_factual, std::span<const double> noise_counterfactual) {
  const std::size_t n = t.size();
  require_shape(p0.size() == n && p1.size() == n && noise_factual.size() == n && noise_counterfactual.size() == n,
                "outcomes: length mismatch");
  OutcomeDraw o;
  o.factual.resize(n);
  o.counterfactual.resize(n);
  o.mu0.resize(n);
  o.mu1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = t[i] ? 1.0 : 0.0;
    o.factual[i] = outcome_scale * (p0[i] + ti * p1[i]) + noise_factual[i];
    o.counterfactual[i] = outcome_scale * (p0[i] + (1.0 - ti) * p1[i]) + noise_counterfactual[i];
    o.mu0[i] = outcome_scale * p0[i];
    o.mu1[i] = outcome_scale * (p0[i] + p1[i]);
  }
  return o;
}

OutcomeDraw gen_outcomes(std::span<const double> p0, std::span<const double> p1, std::span<const std::uint8_t> t,
                         const SimConfig& cfg, Rng& rng) {
  std::vector<double> noise_f(t.size()), noise_cf(t.size());
  for (double& e : noise_f) e = rng.normal(0.0, cfg.noise_std);
  for (double& e : noise_cf) e = rng.normal(0.0, cfg.noise_std);
  return outcomes_from_noise(p0, p1, t, cfg.outcome_scale, noise_f, noise_cf);
}

Simulation simulate_detailed(const SimConfig& cfg) {
  cfg.validate();
  Simulation sim;
  Rng topic_rng(cfg.seed, kTopicStream);
  Rng feature_rng(cfg.seed, kFeatureStream);
  Rng network_rng(cfg.seed, kNetworkStream);
  Rng treatment_rng(cfg.seed, kTreatmentStream);
  Rng outcome_rng(cfg.seed, kOutcomeStream);

  sim.topics = gen_topics(cfg, topic_rng);
  auto features = gen_features(sim.topics.mixtures, sim.topics.topic_word, cfg, feature_rng);
  auto network = gen_network(sim.topics.mixtures, cfg, network_rng);
  sim.centroids = pick_centroids(sim.topics.mixtures, treatment_rng);
  sim.treatment = assign_treatments(sim.topics.mixtures, network, sim.centroids, cfg, treatment_rng);
  auto outcomes = gen_outcomes(sim.treatment.p0, sim.treatment.p1, sim.treatment.t, cfg, outcome_rng);

  auto& ds = sim.dataset;
  ds.observed.features = std::move(features);
  ds.observed.network = std::move(network);
  ds.observed.treatment = sim.treatment.t;
  ds.observed.outcome = std::move(outcomes.factual);
  ds.truth = GroundTruth{std::move(outcomes.counterfactual), std::move(outcomes.mu0), std::move(outcomes.mu1),
                         sim.treatment.prob_treated};
  ds.topics = sim.topics.mixtures;
  return sim;
}

NetworkedDataset simulate(const SimConfig& cfg) { return std::move(simulate_detailed(cfg).dataset); }

}  // namespace netdeconf
