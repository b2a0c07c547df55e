#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

#include "netdeconf/matrix.hpp"

namespace netdeconf {

/// Seeded random source. The engine is std::mt19937_64 keyed by (seed,
/// stream) through std::seed_seq; every distribution on top of it is
/// implemented here, so a given (seed, stream) yields the same draws with
/// any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Gamma(shape, 1).
  double gamma(double shape);
  /// log of a Gamma(shape, 1) variate; stays finite for tiny shapes where
  /// the variate itself underflows.
  double log_gamma_variate(double shape);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

DenseMatrix sample_gaussian(Rng& rng, std::size_t rows, std::size_t cols, double mean, double stddev);

}  // namespace netdeconf

namespace netdeconf {

/// Well-mixed child seed for repetition `index` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace netdeconf
