#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "netdeconf/objective.hpp"
#include "netdeconf/train.hpp"

namespace netdeconf {

/// Cartesian hyperparameter grid. `dims` sets both the representation width
/// and the head width of a cell.
struct GridSpec {
  std::vector<double> learning_rate{1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<std::size_t> out_layers{1, 2, 3};
  std::vector<std::size_t> dims{50, 100, 200};
  std::vector<double> alpha{1e-3, 1e-4, 1e-5, 1e-6};
  std::vector<double> lambda{1e-3, 1e-4, 1e-5, 1e-6};

  std::size_t cell_count() const;
  /// Cells in enumeration order: learning rate outermost, λ innermost. Other
  /// fields come from `base`.
  std::vector<TrainConfig> cells(const TrainConfig& base) const;
};

struct GridCell {
  TrainConfig config;
  bool ok = false;
  std::string error;
  double valid_mse = 0.0;  // best validation factual MSE within the run
  std::size_t selected_epoch = 0;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::size_t winner = 0;
  RunResult winner_run;
};

/// Trains every cell (failing cells are recorded and skipped), picks the one
/// with the lowest validation factual MSE (ties go to the earlier cell) and
/// evaluates only the winner. Throws std::runtime_error if no cell succeeds.
GridResult grid_search(const NetworkedDataset& dataset, const Split& split, const GridSpec& grid,
                       const TrainConfig& base, std::size_t threads = 1);

}  // namespace netdeconf
