#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "netdeconf/dataset.hpp"
#include "netdeconf/graph.hpp"
#include "netdeconf/matrix.hpp"
#include "netdeconf/rng.hpp"
#include "netdeconf/sparse.hpp"

namespace netdeconf {

/// Semi-synthetic generator settings. Defaults are desk-scale stand-ins for
/// the social-network benchmarks (C = 5, κ₁ = 10, 50 topics).
struct SimConfig {
  std::size_t n = 3000;
  std::size_t topics = 50;
  std::size_t vocab = 2000;
  double kappa1 = 10.0;
  double kappa2 = 1.0;
  double outcome_scale = 5.0;  // C
  double dirichlet_alpha = 0.1;     // per-instance topic mixture concentration
  double topic_word_alpha = 0.05;   // per-topic word distribution concentration
  std::size_t words_per_doc = 500;
  double homophily = 10.0;
  double target_degree = 20.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct TopicModel {
  DenseMatrix mixtures;    // r, n×k, rows on the simplex
  DenseMatrix topic_word;  // k×vocab, rows on the simplex
};

struct Centroids {
  std::vector<double> treated;  // r₁ᶜ: topic row of one sampled instance
  std::vector<double> control;  // r₀ᶜ: mean topic row
};

struct TreatmentDraw {
  std::vector<std::uint8_t> t;
  std::vector<double> prob_treated;
  std::vector<double> p0;
  std::vector<double> p1;
};

struct OutcomeDraw {
  std::vector<double> factual;
  std::vector<double> counterfactual;
  std::vector<double> mu0;
  std::vector<double> mu1;
};

/// Dirichlet topic mixtures and topic-word distributions.
TopicModel gen_topics(const SimConfig& cfg, Rng& rng);

/// Bag-of-words counts: words_per_doc draws from r_i·topic_word, generated
/// LDA-style (topic, then word).
SparseMatrix gen_features(const DenseMatrix& mixtures, const DenseMatrix& topic_word, const SimConfig& cfg, Rng& rng);

/// Edge (i, j) kept with probability min(1, s·exp(homophily·r_iᵀr_j)), s tuned
/// so the expected mean degree matches target_degree.
Network gen_network(const DenseMatrix& mixtures, const SimConfig& cfg, Rng& rng);

Centroids pick_centroids(const DenseMatrix& mixtures, Rng& rng);

/// Treatment propensities from own and neighbor topic similarity to the two
/// centroids (raw adjacency, no self-loops), then Bernoulli draws.
TreatmentDraw assign_treatments(const DenseMatrix& mixtures, const Network& net, const Centroids& centroids,
                                const SimConfig& cfg, Rng& rng);

/// Numerically stable exp(p1)/(exp(p1)+exp(p0)), kept strictly inside (0, 1).
double treatment_probability(double p0, double p1);

/// Potential outcomes with independent N(0, noise_std²) noise on the
/// factual and counterfactual draws.
OutcomeDraw gen_outcomes(std::span<const double> p0, std::span<const double> p1, std::span<const std::uint8_t> t,
                         const SimConfig& cfg, Rng& rng);

/// gen_outcomes with the noise supplied by the caller.
OutcomeDraw outcomes_from_noise(std::span<const double> p0, std::span<const double> p1,
                                std::span<const std::uint8_t> t, double outcome_scale,
                                std::span<const double> noise_factual, std::span<const double> noise_counterfactual);

struct Simulation {
  NetworkedDataset dataset;
  TopicModel topics;
  Centroids centroids;
  TreatmentDraw treatment;
};

/// Full generator; each stage draws from its own stream of cfg.seed.
Simulation simulate_detailed(const SimConfig& cfg);
NetworkedDataset simulate(const SimConfig& cfg);

}  // namespace netdeconf
