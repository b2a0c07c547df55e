#include "netdeconf/grid.hpp"

#include <limits>
#include <mutex>
#include <stdexcept>

#include "netdeconf/parallel.hpp"

namespace netdeconf {

std::size_t GridSpec::cell_count() const {
  return learning_rate.size() * out_layers.size() * dims.size() * alpha.size() * lambda.size();
}

std::vector<TrainConfig> GridSpec::cells(const TrainConfig& base) const {
  std::vector<TrainConfig> out;
  out.reserve(cell_count());
  for (double lr : learning_rate)
    for (std::size_t layers : out_layers)
      for (std::size_t dim : dims)
        for (double a : alpha)
          for (double l : lambda) {
            TrainConfig c = base;
            c.learning_rate = lr;
            c.out_layers = layers;
            c.rep_dim = dim;
            c.hidden_units = dim;
            c.alpha = a;
            c.lambda = l;
            out.push_back(c);
          }
  return out;
}

GridResult grid_search(const NetworkedDataset& dataset, const Split& split, const GridSpec& grid,
                       const TrainConfig& base, std::size_t threads) {
  const auto configs = grid.cells(base);
  if (configs.empty()) throw std::invalid_argument("grid_search: empty grid");

  GridResult result;
  result.cells.resize(configs.size());
  std::mutex best_mutex;
  std::optional<std::size_t> best;
  TrainedModel best_model;

  parallel_for(configs.size(), threads, [&](std::size_t k) {
    GridCell& cell = result.cells[k];
    cell.config = configs[k];
    try {
      TrainedModel model = train(dataset.observed, split, configs[k]);
      cell.ok = true;
      cell.selected_epoch = model.selected_epoch;
      cell.valid_mse = model.history[model.selected_epoch].valid_mse;
      std::lock_guard lock(best_mutex);
      if (!best || cell.valid_mse < result.cells[*best].valid_mse ||
          (cell.valid_mse == result.cells[*best].valid_mse && k < *best)) {
        best = k;
        best_model = std::move(model);
      }
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  if (!best) throw std::runtime_error("grid_search: every cell failed");
  result.winner = *best;
  const TrainConfig& win = configs[*best];
  result.winner_run.report = evaluate(best_model.params, dataset.observed,
                                      dataset.truth ? &*dataset.truth : nullptr, split, win);
  result.winner_run.report.selected_epoch = best_model.selected_epoch;
  result.winner_run.report.history = best_model.history;
  result.winner_run.model = std::move(best_model);
  return result;
}

}  // namespace netdeconf
