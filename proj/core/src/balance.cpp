#include "netdeconf/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "netdeconf/errors.hpp"

namespace netdeconf {

namespace {

// Scalings are folded back into the potentials once |log u| or |log v|
// exceeds this.
constexpr double kAbsorbLog = 30.0;
constexpr double kTinyMass = 1e-280;

// Reductions below keep eight interleaved partial sums: a fixed order, so
// still bit-reproducible, but not bound by the latency of a single chain.
double dot(const double* x, const double* y, std::size_t n) {
  double s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8)
    for (std::size_t l = 0; l < 8; ++l) s[l] += x[k + l] * y[k + l];
  for (; k < n; ++k) s[0] += x[k] * y[k];
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

// Entry (i, j) sums squared coordinate differences in ascending k; looping
// over j innermost (against the transposed control set) lets that run in
// parallel lanes.
DenseMatrix pairwise_distances(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.rows());
  const DenseMatrix bt = transpose(b);
  const std::size_t d = a.cols();
  const std::size_t m = b.rows();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (std::size_t k = 0; k < d; ++k) {
      const double x = a(i, k);
      const double* col = bt.row(k).data();
      for (std::size_t j = 0; j < m; ++j) {
        const double diff = x - col[j];
        ci[j] += diff * diff;
      }
    }
    for (std::size_t j = 0; j < m; ++j) ci[j] = std::sqrt(ci[j]);
  }
  return c;
}

// Cost scale and the entries it is a function of (with their weights), so
// the scale can be differentiated.
struct CostScale {
  double value = 0.0;
  std::vector<std::pair<std::size_t, double>> support;
};

CostScale median_cost(const DenseMatrix& cost) {
  const auto values = cost.values();
  const std::size_t count = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  const std::size_t upper = count / 2;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(upper);
  std::nth_element(sorted.begin(), mid, sorted.end());
  // Differentiate through the first entry holding each order statistic.
  auto index_of = [&](double v) {
    return static_cast<std::size_t>(std::find(values.begin(), values.end(), v) - values.begin());
  };
  CostScale s;
  const double hi = *mid;
  if (count % 2 == 1) {
    s.value = hi;
    s.support = {{index_of(hi), 1.0}};
  } else {
    const double lo = *std::max_element(sorted.begin(), mid);
    s.value = 0.5 * (lo + hi);
    s.support = {{index_of(lo), 0.5}, {index_of(hi), 0.5}};
    if (lo == hi) s.support = {{index_of(hi), 1.0}};
  }
  if (s.value > 0.0) return s;
  // More than half the pairs coincide: fall back to the mean cost.
  double total = 0.0;
  for (double v : values) total += v;
  s.value = total / static_cast<double>(count);
  s.support.clear();
  if (s.value > 0.0) {
    const double w = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) s.support.emplace_back(k, w);
  }
  return s;
}

class SinkhornSolver {
 public:
  SinkhornSolver(const DenseMatrix& cost, double eps, std::vector<double> f, std::vector<double> g)
      : cost_(cost),
        eps_(eps),
        n1_(cost.rows()),
        n0_(cost.cols()),
        log_a_(-std::log(static_cast<double>(n1_))),
        log_b_(-std::log(static_cast<double>(n0_))),
        f_(std::move(f)),
        g_(std::move(g)),
        kernel_(n1_, n0_),
        u_(n1_, 1.0),
        v_(n0_, 1.0) {}

  void solve(const SinkhornConfig& cfg) {
    const double a = std::exp(log_a_);
    const double b = std::exp(log_b_);
    rebuild();
    // One sweep over the kernel per iteration: the row update of iteration t
    // is fused with the column sums needed by iteration t + 1.
    std::vector<double> col_sum(n0_), next_col_sum(n0_), bv(n0_), u_next(n1_);
    column_sums(a, col_sum);
    for (iterations_ = 0; iterations_ < cfg.max_iters;) {
      for (std::size_t j = 0; j < n0_; ++j) {
        v_[j] = 1.0 / col_sum[j];
        bv[j] = b * v_[j];
      }
      ++iterations_;

      error_ = 0.0;
      std::fill(next_col_sum.begin(), next_col_sum.end(), 0.0);
      for (std::size_t i = 0; i < n1_; ++i) {
        const double* k = kernel_.row(i).data();
        const double mass = dot(k, bv.data(), n0_);
        error_ += std::abs(a * u_[i] * mass - a);
        u_next[i] = 1.0 / mass;
        const double w = a * u_next[i];
        for (std::size_t j = 0; j < n0_; ++j) next_col_sum[j] += w * k[j];
      }
      if (!std::isfinite(error_)) throw NumericError("sinkhorn: scaling diverged");
      if (error_ < cfg.convergence_tol) {
        converged_ = true;
        break;
      }
      if (iterations_ >= cfg.max_iters) break;
      u_.swap(u_next);
      if (needs_absorb()) {
        rebuild();
        column_sums(a, col_sum);
      } else {
        col_sum.swap(next_col_sum);
      }
    }
    absorb();
  }

  // Plan P_ij = a b exp((f_i + g_j − C_ij)/ε), from the absorbed kernel.
  DenseMatrix plan() const {
    const double ab = std::exp(log_a_ + log_b_);
    DenseMatrix p(n1_, n0_);
    for (std::size_t i = 0; i < n1_; ++i) {
      const double* k = kernel_.row(i).data();
      double* pr = p.row(i).data();
      for (std::size_t j = 0; j < n0_; ++j) pr[j] = ab * u_[i] * k[j] * v_[j];
    }
    return p;
  }

  const std::vector<double>& f() const { return f_; }
  const std::vector<double>& g() const { return g_; }
  std::size_t iterations() const { return iterations_; }
  double error() const { return error_; }
  bool converged() const { return converged_; }

 private:
  void column_sums(double a, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n1_; ++i) {
      const double w = a * u_[i];
      const double* k = kernel_.row(i).data();
      for (std::size_t j = 0; j < n0_; ++j) out[j] += w * k[j];
    }
  }

  bool needs_absorb() const {
    auto out_of_range = [](double x) { return !(std::abs(std::log(x)) < kAbsorbLog); };
    return std::any_of(u_.begin(), u_.end(), out_of_range) || std::any_of(v_.begin(), v_.end(), out_of_range);
  }

  void absorb() {
    for (std::size_t i = 0; i < n1_; ++i) f_[i] += eps_ * std::log(u_[i]);
    for (std::size_t j = 0; j < n0_; ++j) g_[j] += eps_ * std::log(v_[j]);
  }

  // Log-domain f-update fused with recomputing the stabilized kernel
  // exp((f_i + g_j − C_ij)/ε), then u = v = 1.
  void rebuild_rows() {
    for (std::size_t i = 0; i < n1_; ++i) {
      const double* c = cost_.row(i).data();
      double* k = kernel_.row(i).data();
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n0_; ++j) peak = std::max(peak, g_[j] - c[j]);
      double acc = 0.0;
      for (std::size_t j = 0; j < n0_; ++j) {
        k[j] = std::exp((g_[j] - c[j] - peak) / eps_);
        acc += k[j];
      }
      const double s = acc * std::exp(log_b_);
      f_[i] = -peak - eps_ * std::log(s);
      for (std::size_t j = 0; j < n0_; ++j) k[j] /= s;
    }
  }

  // Log-domain g-update (no kernel).
  void log_update_columns() {
    for (std::size_t j = 0; j < n0_; ++j) {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n1_; ++i) peak = std::max(peak, f_[i] - cost_(i, j));
      double acc = 0.0;
      for (std::size_t i = 0; i < n1_; ++i) acc += std::exp((f_[i] - cost_(i, j) - peak) / eps_);
      g_[j] = -peak - eps_ * (log_a_ + std::log(acc));
    }
  }

  void rebuild() {
    absorb();
    for (int attempt = 0; attempt < 3; ++attempt) {
      rebuild_rows();
      std::vector<double> col(n0_, 0.0);
      for (std::size_t i = 0; i < n1_; ++i) {
        const double* k = kernel_.row(i).data();
        for (std::size_t j = 0; j < n0_; ++j) col[j] += k[j];
      }
      const bool starved = std::any_of(col.begin(), col.end(), [&](double m) {
        return !(m * std::exp(log_a_) > kTinyMass);
      });
      if (!starved) break;
      log_update_columns();
    }
    std::fill(u_.begin(), u_.end(), 1.0);
    std::fill(v_.begin(), v_.end(), 1.0);
  }

  const DenseMatrix& cost_;
  double eps_;
  std::size_t n1_, n0_;
  double log_a_, log_b_;
  std::vector<double> f_, g_;
  DenseMatrix kernel_;
  std::vector<double> u_, v_;
  std::size_t iterations_ = 0;
  double error_ = std::numeric_limits<double>::infinity();
  bool converged_ = false;
};

// Solves (diag(κ) − Pᵀdiag(1/ρ)P) y = q by conjugate gradients on the
// complement of the constant vector (the operator's null space).
std::vector<double> solve_schur(const DenseMatrix& plan, const std::vector<double>& rho,
                                const std::vector<double>& kappa, std::vector<double> q) {
  const std::size_t n1 = plan.rows();
  const std::size_t n0 = plan.cols();
  auto center = [&](std::vector<double>& x) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n0);
    for (double& v : x) v -= mean;
  };
  auto apply = [&](const std::vector<double>& y) {
    std::vector<double> py(n1, 0.0);
    for (std::size_t i = 0; i < n1; ++i) py[i] = dot(plan.row(i).data(), y.data(), n0) / rho[i];
    std::vector<double> out(n0);
    for (std::size_t j = 0; j < n0; ++j) out[j] = kappa[j] * y[j];
    for (std::size_t i = 0; i < n1; ++i) {
      const double* p = plan.row(i).data();
      for (std::size_t j = 0; j < n0; ++j) out[j] -= p[j] * py[i];
    }
    center(out);
    return out;
  };
  auto vdot = [](const std::vector<double>& x, const std::vector<double>& y) { return dot(x.data(), y.data(), x.size()); };

  center(q);
  std::vector<double> y(n0, 0.0);
  std::vector<double> r = q;
  const double target = 1e-26 * std::max(vdot(q, q), std::numeric_limits<double>::min());
  double rr = vdot(r, r);
  if (rr == 0.0) return y;
  std::vector<double> p = r;
  const std::size_t cap = std::max<std::size_t>(50, 2 * n0);
  for (std::size_t it = 0; it < std::min<std::size_t>(cap, 1000) && rr > target; ++it) {
    const auto ap = apply(p);
    const double pap = vdot(p, ap);
    if (!(pap > 0.0)) break;
    const double step = rr / pap;
    for (std::size_t k = 0; k < n0; ++k) {
      y[k] += step * p[k];
      r[k] -= step * ap[k];
    }
    const double rr_next = vdot(r, r);
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t k = 0; k < n0; ++k) p[k] = r[k] + beta * p[k];
  }
  return y;
}

}  // namespace

WassersteinResult wasserstein1(const GroupedReps& groups, const SinkhornConfig& cfg, bool with_gradients,
                               SinkhornPotentials* warm_start) {
  const DenseMatrix& treated = groups.treated;
  const DenseMatrix& control = groups.control;
  if (treated.rows() == 0 || control.rows() == 0)
    throw DegenerateSplitError("wasserstein1: degenerate split (" + std::to_string(treated.rows()) + " treated, " +
                               std::to_string(control.rows()) + " control)");
  require_shape(treated.cols() == control.cols(), "wasserstein1: groups have different widths");
  if (!(cfg.entropic_reg > 0.0) || cfg.max_iters == 0)
    throw std::invalid_argument("wasserstein1: entropic_reg must be > 0 and max_iters >= 1");

  const std::size_t n1 = treated.rows();
  const std::size_t n0 = control.rows();
  WassersteinResult result;
  result.grad_treated = DenseMatrix(n1, treated.cols());
  result.grad_control = DenseMatrix(n0, control.cols());

  const DenseMatrix cost = pairwise_distances(treated, control);
  if (!cost.all_finite()) throw NumericError("wasserstein1: non-finite ground cost");
  const CostScale scale = median_cost(cost);
  result.cost_scale = scale.value;
  if (!(scale.value > 0.0)) {
    // Every pair coincides.
    result.converged = true;
    return result;
  }
  const double eps = cfg.entropic_reg * scale.value;
  result.epsilon = eps;

  std::vector<double> f(n1, 0.0), g(n0, 0.0);
  if (warm_start && warm_start->f.size() == n1 && warm_start->g.size() == n0) {
    f = warm_start->f;
    g = warm_start->g;
  }
  SinkhornSolver solver(cost, eps, std::move(f), std::move(g));
  solver.solve(cfg);
  result.iterations = solver.iterations();
  result.marginal_error = solver.error();
  result.converged = solver.converged();
  if (warm_start) {
    warm_start->f = solver.f();
    warm_start->g = solver.g();
  }

  const DenseMatrix plan = solver.plan();
  double distance = 0.0;
  for (std::size_t k = 0; k < plan.size(); ++k) distance += plan.values()[k] * cost.values()[k];
  result.distance = distance;
  if (!with_gradients) return result;

  // Tangent of the plan with respect to ε at fixed cost: Ṗ = P ⊙ (x ⊕ y − Z)
  // with Z = log(P / ab)/ε² and (x, y) chosen so Ṗ keeps both marginals.
  const auto& fp = solver.f();
  const auto& gp = solver.g();
  DenseMatrix z(n1, n0);
  std::vector<double> rho(n1, 0.0), kappa(n0, 0.0), r(n1, 0.0), s(n0, 0.0);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n0; ++j) {
      const double zij = (fp[i] + gp[j] - cost(i, j)) / (eps * eps);
      z(i, j) = zij;
      const double pij = plan(i, j);
      rho[i] += pij;
      kappa[j] += pij;
      r[i] += pij * zij;
      s[j] += pij * zij;
    }
  }
  for (std::size_t i = 0; i < n1; ++i)
    if (!(rho[i] > 0.0)) throw NumericError("wasserstein1: transport plan lost a row");
  std::vector<double> q = s;
  for (std::size_t i = 0; i < n1; ++i) {
    const double w = r[i] / rho[i];
    for (std::size_t j = 0; j < n0; ++j) q[j] -= plan(i, j) * w;
  }
  const std::vector<double> y = solve_schur(plan, rho, kappa, std::move(q));
  std::vector<double> x(n1);
  for (std::size_t i = 0; i < n1; ++i) x[i] = (r[i] - dot(plan.row(i).data(), y.data(), n0)) / rho[i];

  // dS/dC = P − εṖ, plus dS/dε · dε/dC through the median.
  DenseMatrix dcost(n1, n0);
  double ds_deps = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n0; ++j) {
      const double pdot = plan(i, j) * (x[i] + y[j] - z(i, j));
      ds_deps += pdot * cost(i, j);
      dcost(i, j) = plan(i, j) - eps * pdot;
    }
  }
  for (auto [flat, weight] : scale.support) dcost.values()[flat] += cfg.entropic_reg * ds_deps * weight;

  // Chain through C_ij = ‖t_i − c_j‖.
  std::vector<double> row_w(n1, 0.0), col_w(n0, 0.0);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n0; ++j) {
      const double c = cost(i, j);
      const double w = c > 0.0 ? dcost(i, j) / c : 0.0;
      dcost(i, j) = w;
      row_w[i] += w;
      col_w[j] += w;
    }
  }
  const DenseMatrix pulled_control = matmul(dcost, control);
  const DenseMatrix pulled_treated = matmul_tn(dcost, treated);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t k = 0; k < treated.cols(); ++k)
      result.grad_treated(i, k) = row_w[i] * treated(i, k) - pulled_control(i, k);
  for (std::size_t j = 0; j < n0; ++j)
    for (std::size_t k = 0; k < control.cols(); ++k)
      result.grad_control(j, k) = col_w[j] * control(j, k) - pulled_treated(j, k);
  return result;
}

double exact_w1_oracle(const GroupedReps& groups) {
  const std::size_t n = groups.treated.rows();
  if (n != groups.control.rows())
    throw UnsupportedError("exact_w1_oracle: groups must have equal sizes");
  if (n == 0 || n > 8) throw UnsupportedError("exact_w1_oracle: group size must be in 1..8");
  require_shape(groups.treated.cols() == groups.control.cols(), "exact_w1_oracle: width mismatch");
  const DenseMatrix cost = pairwise_distances(groups.treated, groups.control);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

}  // namespace netdeconf
