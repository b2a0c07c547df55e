#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "netdeconf/dataset.hpp"
#include "netdeconf/simgen.hpp"

namespace netdeconf {

inline constexpr int kDatasetFormatVersion = 1;

/// Contents of meta.json.
struct DatasetMeta {
  SimConfig config;                  // full effective generator configuration
  std::optional<std::uint64_t> rep;  // repetition index within a batch
  std::uint64_t seed = 0;            // seed the repetition was generated with
  bool observational_only = false;
};

/// Dataset directory layout:
///   edges.tsv     "i<TAB>j" per undirected edge, 0-indexed, i < j, no header
///   features.mtx  header "n m nnz", then "i j v" per stored entry, 0-indexed
///   nodes.tsv     header "id t yf ycf mu0 mu1 prob_t" (tab-separated); the
///                 observational-only variant keeps "id t yf"
///   meta.json     format version plus the generator configuration
///
/// Throws IoError if a file cannot be written.
void write_dataset(const std::filesystem::path& dir, const NetworkedDataset& dataset, const DatasetMeta& meta);

/// Throws MissingFileError naming the absent file, FormatError on malformed
/// contents or inconsistent sizes.
NetworkedDataset read_dataset(const std::filesystem::path& dir);
DatasetMeta read_dataset_meta(const std::filesystem::path& dir);

std::string sim_config_to_json(const SimConfig& cfg);
/// Unknown keys are rejected; missing keys keep their defaults. Throws
/// std::invalid_argument on bad input.
SimConfig sim_config_from_json(std::string_view text);

/// Whole-file helpers used by the format readers and writers.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace netdeconf
