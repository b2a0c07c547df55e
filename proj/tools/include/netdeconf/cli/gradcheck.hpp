#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace netdeconf::cli {

struct GradcheckInstance {
  std::size_t n = 0, features = 0, rep_dim = 0, out_layers = 0, gcn_layers = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose ±step flips a ReLU input
  double max_rel_error = 0.0;
};

inline constexpr double kGradcheckTolerance = 1e-4;

/// Central finite differences (step 1e-5) of the full training objective
/// against its analytic gradient on `instances` random tiny problems.
std::vector<GradcheckInstance> run_gradcheck(std::uint64_t seed, std::size_t instances);

}  // namespace netdeconf::cli
