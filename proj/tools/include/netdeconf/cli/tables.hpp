#pragma once

#include <optional>
#include <string>
#include <vector>

#include "netdeconf/grid.hpp"
#include "netdeconf/train.hpp"

namespace netdeconf::cli {

/// "dataset rep split pehe_sqrt ate_err mse", one row per split.
std::string results_table(const std::string& dataset, std::optional<std::uint64_t> rep, const MetricsReport& report,
                          bool header = true);

/// Per-epoch training diagnostics.
std::string history_table(const std::vector<EpochLog>& history);

/// One row per grid cell.
std::string grid_table(const GridResult& result);

}  // namespace netdeconf::cli
