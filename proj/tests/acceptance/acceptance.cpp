// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "netdeconf/balance.hpp"
#include "netdeconf/cli/cli.hpp"
#include "netdeconf/cli/gradcheck.hpp"
#include "netdeconf/dataset_io.hpp"
#include "netdeconf/graph.hpp"
#include "netdeconf/metrics.hpp"
#include "netdeconf/simgen.hpp"
#include "netdeconf/train.hpp"
#include "oracles.hpp"

using namespace netdeconf;

namespace {

// The full model keeps improving its validation fit for ~300 epochs on the
// default data while the network-blind one peaks near epoch 40; both stop
// after the same patience so the comparison fits its time budget.
constexpr std::size_t kComparisonEpochs = 300;
constexpr std::size_t kComparisonPatience = 40;

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 for no limit
  std::function<Verdict()> run;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

Verdict gradient_suite() {
  const auto reports = cli::run_gradcheck(0, 20);
  double worst = 0.0;
  std::size_t checked = 0;
  bool ok = reports.size() == 20;
  for (const auto& r : reports) {
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    ok = ok && r.checked > 0 && r.n <= 12 && r.features <= 6 && r.rep_dim <= 4 && r.gcn_layers <= 2;
  }
  return {ok && worst < 1e-4, "max rel error " + fmt(worst) + " over " + std::to_string(checked) + " coordinates"};
}

Verdict ot_oracle() {
  Rng rng(2024);
  SinkhornConfig cfg;
  cfg.entropic_reg = 0.01;
  cfg.max_iters = 100000;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(6), d = 1 + rng.below(3);
    DenseMatrix a(n, d), b(n, d);
    for (double& v : a.values()) v = rng.uniform(-2.0, 2.0);
    for (double& v : b.values()) v = rng.uniform(-2.0, 2.0);
    const double exact = oracle::exact_w1(a, b);
    const double sink = wasserstein1({a, b}, cfg, false).distance;
    worst = std::max(worst, std::abs(sink - exact) / std::max(exact, 1e-12));
  }
  return {worst <= 0.05, "worst relative gap " + fmt(worst)};
}

Verdict adjacency_examples() {
  double worst = 0.0;
  auto check = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  const SparseMatrix one = normalize_adjacency(Network(1, {}));
  check(one.at(0, 0), 1.0);
  const SparseMatrix two = normalize_adjacency(Network(2, std::vector<Edge>{{0, 1}}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) check(two.at(i, j), 0.5);
  const SparseMatrix path = normalize_adjacency(Network(3, std::vector<Edge>{{0, 1}, {1, 2}}));
  const double third = 1.0 / 3.0, side = 1.0 / std::sqrt(6.0);
  const double want[3][3] = {{0.5, side, 0.0}, {side, third, side}, {0.0, side, 0.5}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) check(path.at(i, j), want[i][j]);
  return {worst < 1e-12, "max deviation " + fmt(worst)};
}

Verdict metric_examples() {
  const auto e = effect_metrics(std::vector<double>{2, 4}, std::vector<double>{1, 2});
  const auto z = effect_metrics(std::vector<double>{1, 2}, std::vector<double>{1, 2});
  const bool ok = std::abs(e.pehe_sqrt - std::sqrt(2.5)) < 1e-12 && std::abs(e.ate_err - 1.5) < 1e-12 &&
                  z.pehe_sqrt == 0.0 && z.ate_err == 0.0;
  return {ok, "(" + fmt(e.pehe_sqrt) + ", " + fmt(e.ate_err) + "), perfect (" + fmt(z.pehe_sqrt) + ", " +
                  fmt(z.ate_err) + ")"};
}

Verdict simulation_sanity() {
  SimConfig c;
  c.kappa1 = 0.0;
  c.kappa2 = 0.0;
  c.seed = 31;
  const auto ds = simulate(c);
  const double fraction =
      std::accumulate(ds.observed.treatment.begin(), ds.observed.treatment.end(), 0.0) / static_cast<double>(c.n);
  const bool fair = ds.observed.size() == 3000 && std::abs(fraction - 0.5) <= 0.03;

  Rng rng(32);
  const std::size_t n = 100;
  std::vector<double> p0(n), p1(n), ef(n), ecf(n);
  std::vector<std::uint8_t> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    p0[i] = rng.normal();
    p1[i] = rng.normal();
    ef[i] = rng.normal();
    ecf[i] = rng.normal();
    t[i] = rng.bernoulli(0.5);
  }
  const auto base = outcomes_from_noise(p0, p1, t, 5.0, ef, ecf);
  bool isolated = true;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint8_t> shuffled = t;
    for (std::size_t k = n - 1; k > 0; --k) std::swap(shuffled[k], shuffled[rng.below(k + 1)]);
    shuffled[i] = t[i];
    const auto o = outcomes_from_noise(p0, p1, shuffled, 5.0, ef, ecf);
    isolated = isolated && o.factual[i] == base.factual[i] && o.counterfactual[i] == base.counterfactual[i];
  }

  const std::vector<double> q0{0.3, -0.2, 1.0, 0.0}, q1{1.5, 0.0, -0.7, 2.2};
  const std::vector<std::uint8_t> tt{1, 0, 1, 0};
  SimConfig noise;
  const int draws = 10000;
  std::vector<double> sum(q0.size(), 0.0);
  for (int k = 0; k < draws; ++k) {
    const auto o = gen_outcomes(q0, q1, tt, noise, rng);
    for (std::size_t i = 0; i < q0.size(); ++i)
      sum[i] += tt[i] ? o.factual[i] - o.counterfactual[i] : o.counterfactual[i] - o.factual[i];
  }
  const double sigma = std::sqrt(2.0) * noise.noise_std;
  double worst = 0.0;
  for (std::size_t i = 0; i < q0.size(); ++i)
    worst = std::max(worst, std::abs(sum[i] / draws - noise.outcome_scale * q1[i]) / (sigma / 100.0));

  return {fair && isolated && worst < 3.0, "treated fraction " + fmt(fraction) + ", no-interference " +
                                               (isolated ? "exact" : "violated") + ", worst E[tau] gap " +
                                               fmt(worst) + " sigma/100"};
}

Verdict kappa2_trend() {
  const double kappas[3] = {0.5, 1.0, 2.0};
  double ate[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SimConfig c;
      c.kappa2 = kappas[k];
      c.seed = 600 + seed;
      const auto ds = simulate(c);
      const auto tau = ds.truth->ite(ds.observed);
      ate[k] += std::accumulate(tau.begin(), tau.end(), 0.0) / static_cast<double>(tau.size()) / 10.0;
    }
  }
  return {ate[0] < ate[1] && ate[1] < ate[2],
          "mean ATE " + fmt(ate[0]) + " -> " + fmt(ate[1]) + " -> " + fmt(ate[2])};
}

Verdict network_helps() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SimConfig c;
    c.kappa2 = 2.0;
    c.seed = 700 + seed;
    const auto ds = simulate(c);
    const Split split = Split::random(ds.observed.treatment, seed);
    TrainConfig cfg;
    cfg.epochs = kComparisonEpochs;
    cfg.patience = kComparisonPatience;
    cfg.seed = seed;
    const double full = fit_and_evaluate(ds, split, cfg).report.at(SplitPart::test).pehe_sqrt;
    const double blind = ablation_no_network(ds, split, cfg).report.at(SplitPart::test).pehe_sqrt;
    wins += full < blind;
    detail += (seed ? " " : "") + fmt(full) + "/" + fmt(blind);
    std::cerr << "  criterion 7 seed " << seed << ": full " << full << " ablation " << blind << "\n";
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds favor the network (full/ablation: " + detail + ")"};
}

Verdict balancing_effect() {
  int lowered = 0, degraded = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SimConfig c;
    c.n = 1000;
    c.seed = 800 + seed;
    const auto ds = simulate(c);
    const Split split = Split::random(ds.observed.treatment, seed);
    TrainConfig cfg;  // trainer defaults, run to the last epoch
    cfg.seed = seed;
    auto run_with = [&](double alpha) {
      TrainConfig k = cfg;
      k.alpha = alpha;
      return fit_and_evaluate(ds, split, k);
    };
    const auto none = run_with(0.0), some = run_with(1e-3), small = run_with(1e-4), large = run_with(1.0);
    const double ipm0 = none.model.history.back().parts.ipm, ipm1 = some.model.history.back().parts.ipm;
    const double pehe_small = small.report.at(SplitPart::test).pehe_sqrt;
    const double pehe_large = large.report.at(SplitPart::test).pehe_sqrt;
    lowered += ipm1 < ipm0;
    degraded += pehe_large >= pehe_small;
    std::cerr << "  criterion 8 seed " << seed << ": ipm " << ipm0 << " -> " << ipm1 << ", pehe alpha=1e-4 "
              << pehe_small << " alpha=1 " << pehe_large << "\n";
  }
  detail = "IPM lowered in " + std::to_string(lowered) + "/5, large alpha no better in " + std::to_string(degraded) +
           "/5";
  return {lowered >= 4 && degraded >= 4, detail};
}

int call_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "netdeconf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Verdict determinism() {
  oracle::TempDir dir;
  SimConfig c;
  c.n = 400;
  c.seed = 900;
  write_text_file(dir / "sim.json", sim_config_to_json(c));
  if (call_cli({"simulate", "--config", (dir / "sim.json").string(), "--out", (dir / "data").string()}) != 0)
    return {false, "simulate failed"};
  const std::string data = (dir / "data" / "rep_0").string();
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    const int code = call_cli({"train", "--data", data, "--epochs", "30", "--dim", "32", "--seed", "5", "--checkpoint",
                               (dir / (t + ".ckpt")).string(), "--results", (dir / (t + ".tsv")).string()});
    if (code != 0) return {false, "train exited with " + std::to_string(code)};
  }
  const bool same_ckpt = read_text_file(dir / "a.ckpt") == read_text_file(dir / "b.ckpt");
  const bool same_results = read_text_file(dir / "a.tsv") == read_text_file(dir / "b.tsv");
  return {same_ckpt && same_results, std::string("checkpoints ") + (same_ckpt ? "identical" : "differ") +
                                         ", results " + (same_results ? "identical" : "differ")};
}

Verdict loss_decomposition() {
  SimConfig c;
  c.n = 400;
  c.seed = 1000;
  const auto ds = simulate(c);
  const Split split = Split::random(ds.observed.treatment, 1);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.rep_dim = cfg.hidden_units = 32;
  cfg.alpha = 0.5;
  cfg.lambda = 1e-3;
  cfg.seed = 1;
  const auto model = train(ds.observed, split, cfg);
  double worst = 0.0;
  for (const auto& e : model.history)
    worst = std::max(worst, std::abs(e.parts.loss - (e.parts.mse + cfg.alpha * e.parts.ipm + cfg.lambda * e.parts.l2)));
  return {worst <= 1e-9 && model.history.size() == cfg.epochs + 1,
          "max deviation " + fmt(worst) + " over " + std::to_string(model.history.size()) + " epochs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "gradient suite", 30, gradient_suite},
      {2, "OT oracle equivalence", 10, ot_oracle},
      {3, "adjacency normalization", 0, adjacency_examples},
      {4, "metric examples", 0, metric_examples},
      {5, "simulation sanity", 0, simulation_sanity},
      {6, "kappa2 raises the mean effect", 120, kappa2_trend},
      {7, "network beats the identity ablation", 1200, network_helps},
      {8, "balancing effect", 0, balancing_effect},
      {9, "determinism", 0, determinism},
      {10, "loss decomposition", 0, loss_decomposition},
  };
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::stoi(argv[k]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const double start = cpu_seconds();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = cpu_seconds() - start;
    std::string timing = fmt(elapsed) + " s";
    if (c.budget_s > 0 && elapsed >= c.budget_s) {
      v.pass = false;
      timing += " exceeds " + fmt(c.budget_s) + " s";
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << v.detail << " ["
              << timing << "]" << std::endl;
  }
  return failures ? 1 : 0;
}
