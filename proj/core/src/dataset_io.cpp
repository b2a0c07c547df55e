#include "netdeconf/dataset_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "netdeconf/errors.hpp"
#include "netdeconf/text_format.hpp"

namespace netdeconf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kFullHeader = "id\tt\tyf\tycf\tmu0\tmu1\tprob_t";
constexpr std::string_view kObservedHeader = "id\tt\tyf";

json config_json(const SimConfig& c) {
  return json{{"n", c.n},
              {"topics", c.topics},
              {"vocab", c.vocab},
              {"kappa1", c.kappa1},
              {"kappa2", c.kappa2},
              {"outcome_scale", c.outcome_scale},
              {"dirichlet_alpha", c.dirichlet_alpha},
              {"topic_word_alpha", c.topic_word_alpha},
              {"words_per_doc", c.words_per_doc},
              {"homophily", c.homophily},
              {"target_degree", c.target_degree},
              {"noise_std", c.noise_std},
              {"seed", c.seed}};
}

SimConfig config_from(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("simulation config must be a JSON object");
  SimConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n") c.n = value.get<std::size_t>();
      else if (key == "topics") c.topics = value.get<std::size_t>();
      else if (key == "vocab") c.vocab = value.get<std::size_t>();
      else if (key == "kappa1") c.kappa1 = value.get<double>();
      else if (key == "kappa2") c.kappa2 = value.get<double>();
      else if (key == "outcome_scale") c.outcome_scale = value.get<double>();
      else if (key == "dirichlet_alpha") c.dirichlet_alpha = value.get<double>();
      else if (key == "topic_word_alpha") c.topic_word_alpha = value.get<double>();
      else if (key == "words_per_doc") c.words_per_doc = value.get<std::size_t>();
      else if (key == "homophily") c.homophily = value.get<double>();
      else if (key == "target_degree") c.target_degree = value.get<double>();
      else if (key == "noise_std") c.noise_std = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw std::invalid_argument("simulation config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("simulation config: ") + e.what());
  }
  return c;
}

fs::path require_file(const fs::path& dir, const char* name) {
  fs::path p = dir / name;
  if (!fs::is_regular_file(p)) throw MissingFileError("missing dataset file: " + p.string());
  return p;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = end + 1;
  }
  return out;
}

std::string where(const fs::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string sim_config_to_json(const SimConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

SimConfig sim_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("simulation config is not valid JSON: ") + e.what());
  }
  return config_from(j);
}

void write_dataset(const fs::path& dir, const NetworkedDataset& dataset, const DatasetMeta& meta) {
  const ObservedData& obs = dataset.observed;
  obs.validate();
  const bool with_truth = !meta.observational_only && dataset.truth.has_value();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::string edges;
  for (auto [i, j] : obs.network.edges()) edges += std::to_string(i) + "\t" + std::to_string(j) + "\n";
  write_text_file(dir / "edges.tsv", edges);

  std::string mtx = std::to_string(obs.features.rows()) + " " + std::to_string(obs.features.cols()) + " " +
                    std::to_string(obs.features.nnz()) + "\n";
  for (const auto& t : obs.features.triplets())
    mtx += std::to_string(t.row) + " " + std::to_string(t.col) + " " + format_double(t.value) + "\n";
  write_text_file(dir / "features.mtx", mtx);

  std::string nodes(with_truth ? kFullHeader : kObservedHeader);
  nodes += "\n";
  const GroundTruth* truth = with_truth ? &*dataset.truth : nullptr;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    nodes += std::to_string(i) + "\t" + std::to_string(int{obs.treatment[i]}) + "\t" + format_double(obs.outcome[i]);
    if (truth)
      nodes += "\t" + format_double(truth->counterfactual[i]) + "\t" + format_double(truth->mu0[i]) + "\t" +
               format_double(truth->mu1[i]) + "\t" + format_double(truth->prob_treated[i]);
    nodes += "\n";
  }
  write_text_file(dir / "nodes.tsv", nodes);

  json m{{"format_version", kDatasetFormatVersion},
         {"n", obs.size()},
         {"features", obs.features.cols()},
         {"edges", obs.network.edge_count()},
         {"seed", meta.seed},
         {"observational_only", !with_truth},
         {"config", config_json(meta.config)}};
  if (meta.rep) m["rep"] = *meta.rep;
  write_text_file(dir / "meta.json", m.dump(2) + "\n");
}

DatasetMeta read_dataset_meta(const fs::path& dir) {
  const fs::path path = require_file(dir, "meta.json");
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kDatasetFormatVersion)
      throw FormatError(path.string() + ": unsupported format_version " + std::to_string(version));
    DatasetMeta meta;
    meta.config = config_from(j.at("config"));
    meta.seed = j.value("seed", meta.config.seed);
    meta.observational_only = j.value("observational_only", false);
    if (j.contains("rep")) meta.rep = j.at("rep").get<std::uint64_t>();
    return meta;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

NetworkedDataset read_dataset(const fs::path& dir) {
  const fs::path edges_path = require_file(dir, "edges.tsv");
  const fs::path features_path = require_file(dir, "features.mtx");
  const fs::path nodes_path = require_file(dir, "nodes.tsv");
  read_dataset_meta(dir);

  NetworkedDataset ds;
  ObservedData& obs = ds.observed;

  // nodes.tsv fixes n.
  const std::string nodes_text = read_text_file(nodes_path);
  const auto node_lines = lines_of(nodes_text);
  if (node_lines.empty()) throw FormatError(nodes_path.string() + ": empty file");
  const bool with_truth = node_lines[0] == kFullHeader;
  if (!with_truth && node_lines[0] != kObservedHeader)
    throw FormatError(where(nodes_path, 1) + ": unexpected header '" + std::string(node_lines[0]) + "'");
  GroundTruth truth;
  for (std::size_t k = 1; k < node_lines.size(); ++k) {
    if (node_lines[k].empty()) continue;
    const auto ctx = where(nodes_path, k + 1);
    const auto f = split_fields(node_lines[k], '\t');
    if (f.size() != (with_truth ? 7u : 3u)) throw FormatError(ctx + ": wrong number of columns");
    if (parse_u64(f[0], ctx) != obs.treatment.size()) throw FormatError(ctx + ": ids must be 0..n-1 in order");
    const auto t = parse_u64(f[1], ctx);
    if (t > 1) throw FormatError(ctx + ": treatment must be 0 or 1");
    obs.treatment.push_back(static_cast<std::uint8_t>(t));
    obs.outcome.push_back(parse_double(f[2], ctx));
    if (with_truth) {
      truth.counterfactual.push_back(parse_double(f[3], ctx));
      truth.mu0.push_back(parse_double(f[4], ctx));
      truth.mu1.push_back(parse_double(f[5], ctx));
      truth.prob_treated.push_back(parse_double(f[6], ctx));
    }
  }
  const std::size_t n = obs.treatment.size();
  if (with_truth) ds.truth = std::move(truth);

  const std::string mtx_text = read_text_file(features_path);
  const auto mtx_lines = lines_of(mtx_text);
  if (mtx_lines.empty()) throw FormatError(features_path.string() + ": empty file");
  const auto header = split_whitespace(mtx_lines[0]);
  if (header.size() != 3) throw FormatError(where(features_path, 1) + ": header must be 'n m nnz'");
  const auto rows = parse_u64(header[0], where(features_path, 1));
  const auto cols = parse_u64(header[1], where(features_path, 1));
  const auto nnz = parse_u64(header[2], where(features_path, 1));
  if (rows != n)
    throw FormatError(features_path.string() + ": " + std::to_string(rows) + " rows but nodes.tsv has " +
                      std::to_string(n) + " nodes");
  std::vector<Triplet> triplets;
  triplets.reserve(nnz);
  for (std::size_t k = 1; k < mtx_lines.size(); ++k) {
    if (mtx_lines[k].empty()) continue;
    const auto ctx = where(features_path, k + 1);
    const auto f = split_whitespace(mtx_lines[k]);
    if (f.size() != 3) throw FormatError(ctx + ": expected 'i j v'");
    const auto i = parse_u64(f[0], ctx);
    const auto j = parse_u64(f[1], ctx);
    if (i >= rows || j >= cols) throw FormatError(ctx + ": entry outside the declared shape");
    triplets.push_back({i, j, parse_double(f[2], ctx)});
  }
  if (triplets.size() != nnz)
    throw FormatError(features_path.string() + ": header declares " + std::to_string(nnz) + " entries, found " +
                      std::to_string(triplets.size()));
  try {
    obs.features = SparseMatrix::from_triplets(rows, cols, std::move(triplets));
  } catch (const std::exception& e) {
    throw FormatError(features_path.string() + ": " + e.what());
  }

  const std::string edges_text = read_text_file(edges_path);
  const auto edge_lines = lines_of(edges_text);
  std::vector<Edge> edges;
  edges.reserve(edge_lines.size());
  for (std::size_t k = 0; k < edge_lines.size(); ++k) {
    if (edge_lines[k].empty()) continue;
    const auto ctx = where(edges_path, k + 1);
    const auto f = split_fields(edge_lines[k], '\t');
    if (f.size() != 2) throw FormatError(ctx + ": expected 'i<TAB>j'");
    edges.emplace_back(parse_u64(f[0], ctx), parse_u64(f[1], ctx));
  }
  try {
    obs.network = Network(n, edges);
  } catch (const std::exception& e) {
    throw FormatError(edges_path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace netdeconf
