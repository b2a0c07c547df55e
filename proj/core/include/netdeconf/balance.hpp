#pragma once

#include <cstddef>
#include <vector>

#include "netdeconf/matrix.hpp"

namespace netdeconf {

/// Rows of H split by treatment arm.
struct GroupedReps {
  DenseMatrix treated;  // empirical P(h), uniform weights 1/n₁
  DenseMatrix control;  // empirical Q(h), uniform weights 1/n₀
};

struct SinkhornConfig {
  /// Entropic regularization as a multiple of the median pairwise cost.
  double entropic_reg = 0.1;
  std::size_t max_iters = 300;
  /// Stop once the L1 violation of the row marginal drops below this.
  double convergence_tol = 1e-6;
};

/// Dual potentials of a previous solve, reused as the starting point of the
/// next one when the group sizes match.
struct SinkhornPotentials {
  std::vector<double> f;
  std::vector<double> g;
};

struct WassersteinResult {
  /// Transport cost Σ P_ij‖h_i − h_j‖ under the entropic plan P.
  double distance = 0.0;
  DenseMatrix grad_treated;
  DenseMatrix grad_control;
  /// Absolute regularization actually used (entropic_reg × cost scale).
  double epsilon = 0.0;
  double cost_scale = 0.0;
  std::size_t iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
};

/// Empirical Wasserstein-1 distance between the two groups, Euclidean
/// ground cost, via log-stabilized Sinkhorn scaling.
///
/// Gradients are the exact derivative of `distance` at the returned plan:
/// the plan's dependence on the cost is differentiated implicitly through
/// the marginal constraints, including the dependence of ε on the median
/// cost. They are exact once the solve has converged and approximate when
/// the iteration cap is hit.
///
/// Throws DegenerateSplitError if either group is empty and NumericError on
/// non-finite costs.
WassersteinResult wasserstein1(const GroupedReps& groups, const SinkhornConfig& cfg = {},
                               bool with_gradients = true, SinkhornPotentials* warm_start = nullptr);

/// Exact W₁ for equal-size groups by enumerating all matchings. Sizes above 8
/// are rejected.
double exact_w1_oracle(const GroupedReps& groups);

}  // namespace netdeconf
