#include "netdeconf/cli/cli.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "netdeconf/checkpoint.hpp"
#include "netdeconf/cli/gradcheck.hpp"
#include "netdeconf/cli/tables.hpp"
#include "netdeconf/dataset_io.hpp"
#include "netdeconf/errors.hpp"
#include "netdeconf/grid.hpp"
#include "netdeconf/rng.hpp"
#include "netdeconf/simgen.hpp"
#include "netdeconf/text_format.hpp"
#include "netdeconf/train.hpp"

namespace netdeconf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t reps = 1;
  bool observational_only = false;
};

struct ModelArgs {
  double alpha = TrainConfig{}.alpha;
  double lambda = TrainConfig{}.lambda;
  double lr = TrainConfig{}.learning_rate;
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t patience = TrainConfig{}.patience;
  std::size_t gcn_layers = TrainConfig{}.gcn_layers;
  std::size_t out_layers = TrainConfig{}.out_layers;
  std::size_t dim = TrainConfig{}.rep_dim;
  std::optional<std::size_t> hidden;
  std::uint64_t seed = 0;
  bool identity = false;
  double entropic_reg = SinkhornConfig{}.entropic_reg;
  std::size_t sinkhorn_iters = SinkhornConfig{}.max_iters;

  TrainConfig config() const {
    TrainConfig c;
    c.alpha = alpha;
    c.lambda = lambda;
    c.learning_rate = lr;
    c.epochs = epochs;
    c.patience = patience;
    c.gcn_layers = gcn_layers;
    c.out_layers = out_layers;
    c.rep_dim = dim;
    c.hidden_units = hidden.value_or(dim);
    c.seed = seed;
    c.identity_adjacency = identity;
    c.sinkhorn.entropic_reg = entropic_reg;
    c.sinkhorn.max_iters = sinkhorn_iters;
    return c;
  }
};

struct TrainArgs {
  std::string data;
  ModelArgs model;
  std::string checkpoint;
  std::string results;
  std::string history;
  std::string log;
};

struct GridArgs {
  std::string data;
  std::string grid;
  std::uint64_t seed = 0;
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t gcn_layers = TrainConfig{}.gcn_layers;
  std::size_t threads = 1;
  std::string out;
  std::string log;
};

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string results;
};

// Timestamped lines; the only output that is allowed to vary between runs.
class RunLog {
 public:
  explicit RunLog(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::app);
    if (!file_) throw IoError("cannot open log file " + path);
  }
  void line(const std::string& text) {
    if (!file_.is_open()) return;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    file_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << "\t" << text << "\n";
    file_.flush();
  }

 private:
  std::ofstream file_;
};

std::string dataset_name(const std::string& dir) {
  fs::path p = fs::path(dir).lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  const std::string name = p.filename().string();
  return name.empty() ? dir : name;
}

void write_output(const std::string& path, const std::string& contents) {
  if (!path.empty()) write_text_file(path, contents);
}

void add_model_options(CLI::App& cmd, ModelArgs& m) {
  cmd.add_option("--alpha", m.alpha, "Balancing penalty weight")->capture_default_str();
  cmd.add_option("--lambda", m.lambda, "Squared l2 penalty weight")->capture_default_str();
  cmd.add_option("--lr", m.lr, "ADAM learning rate")->capture_default_str();
  cmd.add_option("--epochs", m.epochs, "Training epochs")->capture_default_str();
  cmd.add_option("--patience", m.patience, "Stop after this many epochs without a validation improvement (0 = never)")
      ->capture_default_str();
  cmd.add_option("--gcn-layers", m.gcn_layers, "Graph convolution layers")->capture_default_str();
  cmd.add_option("--out-layers", m.out_layers, "Hidden layers per outcome head")->capture_default_str();
  cmd.add_option("--dim", m.dim, "Representation width")->capture_default_str();
  cmd.add_option("--hidden", m.hidden, "Head width (defaults to --dim)");
  cmd.add_option("--seed", m.seed, "Seed for initialization and the split")->capture_default_str();
  cmd.add_flag("--ablation-identity", m.identity, "Replace the normalized adjacency with the identity");
  cmd.add_option("--entropic-reg", m.entropic_reg, "Sinkhorn regularization relative to the median cost")
      ->capture_default_str();
  cmd.add_option("--sinkhorn-iters", m.sinkhorn_iters, "Sinkhorn iteration cap")->capture_default_str();
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  SimConfig cfg;
  if (!a.config.empty()) cfg = sim_config_from_json(read_text_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  if (a.reps == 0) throw std::invalid_argument("--reps must be at least 1");

  std::string table = "rep\tseed\tdir\tn\tedges\ttreated\tate\n";
  for (std::size_t rep = 0; rep < a.reps; ++rep) {
    SimConfig rep_cfg = cfg;
    rep_cfg.seed = derive_seed(cfg.seed, rep);
    const NetworkedDataset ds = simulate(rep_cfg);
    const fs::path dir = fs::path(a.out) / ("rep_" + std::to_string(rep));
    DatasetMeta meta;
    meta.config = cfg;
    meta.rep = rep;
    meta.seed = rep_cfg.seed;
    meta.observational_only = a.observational_only;
    write_dataset(dir, ds, meta);

    std::size_t treated = 0;
    for (auto t : ds.observed.treatment) treated += t;
    const auto tau = ds.truth->ite(ds.observed);
    double ate = 0.0;
    for (double v : tau) ate += v;
    ate /= static_cast<double>(tau.size());
    table += std::to_string(rep) + "\t" + std::to_string(rep_cfg.seed) + "\t" + dir.string() + "\t" +
             std::to_string(ds.observed.size()) + "\t" + std::to_string(ds.observed.network.edge_count()) + "\t" +
             std::to_string(treated) + "\t" + format_double(ate) + "\n";
    err << "simulate: wrote " << dir.string() << "\n";
  }
  out << table;
  return kOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunLog log(a.log);
  const TrainConfig cfg = a.model.config();
  cfg.validate();
  const NetworkedDataset ds = read_dataset(a.data);
  const DatasetMeta meta = read_dataset_meta(a.data);
  log.line("train start " + a.data);

  const Split split = Split::random(ds.observed.treatment, cfg.seed);
  const RunResult run = fit_and_evaluate(ds, split, cfg);
  if (!a.checkpoint.empty())
    save_checkpoint(a.checkpoint, Checkpoint{cfg.architecture(ds.observed.features.cols()), cfg.seed,
                                             cfg.identity_adjacency, run.model.params});
  const std::string results = results_table(dataset_name(a.data), meta.rep, run.report);
  write_output(a.results, results);
  write_output(a.history, history_table(run.model.history));
  out << results;
  err << "train: selected epoch " << run.model.selected_epoch << " of " << cfg.epochs << "; sinkhorn hit its cap in "
      << run.model.sinkhorn_unconverged << " epochs\n";
  if (!ds.truth) err << "train: dataset has no ground truth, effect metrics are NA\n";
  log.line("train done");
  return kOk;
}

template <typename T>
void read_list(const json& j, const char* key, std::vector<T>& target) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.empty()) throw std::invalid_argument(std::string("grid: '") + key + "' must be a non-empty list");
  target = v.get<std::vector<T>>();
}

GridSpec read_grid(const std::string& path, GridArgs& a) {
  GridSpec spec;
  if (path.empty()) return spec;
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw std::invalid_argument("grid file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("grid file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "learning_rate") read_list(j, "learning_rate", spec.learning_rate);
      else if (key == "out_layers") read_list(j, "out_layers", spec.out_layers);
      else if (key == "dims") read_list(j, "dims", spec.dims);
      else if (key == "alpha") read_list(j, "alpha", spec.alpha);
      else if (key == "lambda") read_list(j, "lambda", spec.lambda);
      else if (key == "epochs") a.epochs = value.get<std::size_t>();
      else if (key == "gcn_layers") a.gcn_layers = value.get<std::size_t>();
      else throw std::invalid_argument("grid file: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument("grid file " + path + ": " + e.what());
  }
  return spec;
}

int cmd_grid(GridArgs a, std::ostream& out, std::ostream& err) {
  RunLog log(a.log);
  const GridSpec spec = read_grid(a.grid, a);
  TrainConfig base;
  base.seed = a.seed;
  base.epochs = a.epochs;
  base.gcn_layers = a.gcn_layers;

  const NetworkedDataset ds = read_dataset(a.data);
  const DatasetMeta meta = read_dataset_meta(a.data);
  const Split split = Split::random(ds.observed.treatment, a.seed);
  log.line("grid start " + a.data + " cells " + std::to_string(spec.cell_count()));
  err << "grid: " << spec.cell_count() << " cells\n";
  const GridResult result = grid_search(ds, split, spec, base, a.threads);
  for (std::size_t k = 0; k < result.cells.size(); ++k)
    if (!result.cells[k].ok) err << "grid: cell " << k << " failed: " << result.cells[k].error << "\n";

  const std::string grid = grid_table(result);
  const std::string results = results_table(dataset_name(a.data), meta.rep, result.winner_run.report);
  if (!a.out.empty()) {
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
    write_text_file(fs::path(a.out) / "grid.tsv", grid);
    write_text_file(fs::path(a.out) / "results.tsv", results);
    const TrainConfig& win = result.cells[result.winner].config;
    save_checkpoint(fs::path(a.out) / "checkpoint.txt",
                    Checkpoint{win.architecture(ds.observed.features.cols()), win.seed, win.identity_adjacency,
                               result.winner_run.model.params});
  }
  out << grid << "\n" << results;
  log.line("grid done, winner cell " + std::to_string(result.winner));
  return kOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream&) {
  const NetworkedDataset ds = read_dataset(a.data);
  const DatasetMeta meta = read_dataset_meta(a.data);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  if (ckpt.arch.features != ds.observed.features.cols())
    throw CheckpointError("checkpoint expects " + std::to_string(ckpt.arch.features) + " features, dataset has " +
                          std::to_string(ds.observed.features.cols()));
  TrainConfig cfg;
  cfg.seed = ckpt.seed;
  cfg.identity_adjacency = ckpt.identity_adjacency;
  const Split split = Split::random(ds.observed.treatment, cfg.seed);
  const MetricsReport report = evaluate(ckpt.params, ds.observed, ds.truth ? &*ds.truth : nullptr, split, cfg);
  const std::string results = results_table(dataset_name(a.data), meta.rep, report);
  write_output(a.results, results);
  out << results;
  return kOk;
}

// Mean and sample standard deviation per split over several results tables.
// NA entries (observational-only data) are left out of the effect columns.
int cmd_pool(const std::vector<std::string>& files, std::ostream& out) {
  constexpr const char* kHeader = "dataset\trep\tsplit\tpehe_sqrt\tate_err\tmse";
  std::vector<std::string> splits;
  std::vector<std::array<std::vector<double>, 3>> values;
  for (const auto& file : files) {
    std::istringstream in(read_text_file(file));
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw FormatError(file + ": not a results table");
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const auto f = split_fields(line, '\t');
      const std::string where = file + " line " + std::to_string(row);
      if (f.size() != 6) throw FormatError(where + ": expected 6 fields");
      const std::string split(f[2]);
      std::size_t k = 0;
      while (k < splits.size() && splits[k] != split) ++k;
      if (k == splits.size()) {
        splits.push_back(split);
        values.emplace_back();
      }
      for (std::size_t c = 0; c < 3; ++c)
        if (f[3 + c] != "NA") values[k][c].push_back(parse_double(f[3 + c], where));
    }
  }
  auto summary = [](const std::vector<double>& v) {
    if (v.empty()) return std::string("NA\tNA");
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() == 1) return format_double(mean) + "\tNA";
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return format_double(mean) + "\t" + format_double(std::sqrt(ss / static_cast<double>(v.size() - 1)));
  };
  std::string table = "split\truns\tpehe_sqrt_mean\tpehe_sqrt_sd\tate_err_mean\tate_err_sd\tmse_mean\tmse_sd\n";
  for (std::size_t k = 0; k < splits.size(); ++k) {
    table += splits[k] + "\t" + std::to_string(values[k][2].size());
    for (std::size_t c = 0; c < 3; ++c) table += "\t" + summary(values[k][c]);
    table += "\n";
  }
  out << table;
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances, std::ostream& out, std::ostream& err) {
  const auto reports = run_gradcheck(seed, instances);
  std::string table = "instance\tn\tfeatures\trep_dim\tout_layers\tgcn_layers\tchecked\tskipped\tmax_rel_error\n";
  double worst = 0.0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    worst = std::max(worst, r.max_rel_error);
    table += std::to_string(k) + "\t" + std::to_string(r.n) + "\t" + std::to_string(r.features) + "\t" +
             std::to_string(r.rep_dim) + "\t" + std::to_string(r.out_layers) + "\t" + std::to_string(r.gcn_layers) +
             "\t" + std::to_string(r.checked) + "\t" + std::to_string(r.skipped) + "\t" +
             format_double(r.max_rel_error) + "\n";
  }
  out << table;
  if (!(worst < kGradcheckTolerance)) {
    err << "gradcheck: max relative error " << worst << " exceeds " << kGradcheckTolerance << "\n";
    return kGradcheckFailed;
  }
  err << "gradcheck: max relative error " << worst << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network deconfounder: treatment effects from networked observational data"};
  app.name("netdeconf");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate semi-synthetic datasets");
  simulate_cmd->add_option("--config", sim.config, "JSON generator configuration (missing keys keep defaults)");
  simulate_cmd->add_option("--out", sim.out, "Output directory; repetitions go to rep_<i>/")->required();
  simulate_cmd->add_option("--seed", sim.seed, "Base seed (overrides the config's seed)");
  simulate_cmd->add_option("--reps", sim.reps, "Number of repetitions")->capture_default_str();
  simulate_cmd->add_flag("--observational-only", sim.observational_only, "Omit ground-truth columns");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one model and report metrics");
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  add_model_options(*train_cmd, tr.model);
  train_cmd->add_option("--checkpoint", tr.checkpoint, "Write the selected parameters here");
  train_cmd->add_option("--results", tr.results, "Write results.tsv here");
  train_cmd->add_option("--history", tr.history, "Write per-epoch diagnostics here");
  train_cmd->add_option("--log", tr.log, "Append timestamped progress lines here");

  GridArgs gr;
  auto* grid_cmd = app.add_subcommand("grid", "Grid search over hyperparameters");
  grid_cmd->add_option("--data", gr.data, "Dataset directory")->required();
  grid_cmd->add_option("--grid", gr.grid, "JSON grid (missing keys keep the default ranges)");
  grid_cmd->add_option("--seed", gr.seed, "Seed for every cell and the split")->capture_default_str();
  grid_cmd->add_option("--epochs", gr.epochs, "Training epochs per cell")->capture_default_str();
  grid_cmd->add_option("--gcn-layers", gr.gcn_layers, "Graph convolution layers")->capture_default_str();
  grid_cmd->add_option("--threads", gr.threads, "Worker threads")->capture_default_str();
  grid_cmd->add_option("--out", gr.out, "Write grid.tsv, results.tsv and the winner's checkpoint here");
  grid_cmd->add_option("--log", gr.log, "Append timestamped progress lines here");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Recompute metrics from a checkpoint");
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--results", ev.results, "Write results.tsv here");

  std::uint64_t gc_seed = 0;
  std::size_t gc_instances = 1;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the training gradient");
  gradcheck_cmd->add_option("--seed", gc_seed, "Instance seed")->capture_default_str();
  gradcheck_cmd->add_option("--instances", gc_instances, "Number of random instances")->capture_default_str();

  std::vector<std::string> pool_files;
  auto* pool_cmd = app.add_subcommand("pool", "Summarize results tables from repeated runs");
  pool_cmd->add_option("files", pool_files, "results.tsv files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim, out, err);
    if (*train_cmd) return cmd_train(tr, out, err);
    if (*grid_cmd) return cmd_grid(gr, out, err);
    if (*eval_cmd) return cmd_eval(ev, out, err);
    if (*gradcheck_cmd) return cmd_gradcheck(gc_seed, gc_instances, out, err);
    if (*pool_cmd) return cmd_pool(pool_files, out);
  } catch (const MissingFileError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kCheckpointMismatch;
  } catch (const DegenerateSplitError& e) {
    err << "error: " << e.what() << "\n";
    return kDegenerateSplit;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNonFiniteLoss;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kBadInput;
}

}  // namespace netdeconf::cli
