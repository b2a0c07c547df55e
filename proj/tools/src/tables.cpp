#include "netdeconf/cli/tables.hpp"

#include "netdeconf/text_format.hpp"

namespace netdeconf::cli {

std::string results_table(const std::string& dataset, std::optional<std::uint64_t> rep, const MetricsReport& report,
                          bool header) {
  std::string s;
  if (header) s += "dataset\trep\tsplit\tpehe_sqrt\tate_err\tmse\n";
  const std::string rep_text = rep ? std::to_string(*rep) : "NA";
  for (SplitPart p : {SplitPart::train, SplitPart::valid, SplitPart::test}) {
    const auto& m = report.at(p);
    s += dataset + "\t" + rep_text + "\t" + std::string(split_part_name(p)) + "\t" + format_double(m.pehe_sqrt) + "\t" +
         format_double(m.ate_err) + "\t" + format_double(m.factual_mse) + "\n";
  }
  return s;
}

std::string history_table(const std::vector<EpochLog>& history) {
  std::string s = "epoch\tloss\tmse\tipm\tl2\tvalid_mse\tsinkhorn_converged\n";
  for (const auto& e : history)
    s += std::to_string(e.epoch) + "\t" + format_double(e.parts.loss) + "\t" + format_double(e.parts.mse) + "\t" +
         format_double(e.parts.ipm) + "\t" + format_double(e.parts.l2) + "\t" + format_double(e.valid_mse) + "\t" +
         (e.sinkhorn_converged ? "1" : "0") + "\n";
  return s;
}

std::string grid_table(const GridResult& result) {
  std::string s = "cell\tlearning_rate\tout_layers\tdims\talpha\tlambda\tstatus\tvalid_mse\tselected_epoch\twinner\terror\n";
  for (std::size_t k = 0; k < result.cells.size(); ++k) {
    const auto& c = result.cells[k];
    std::string error = c.error;
    for (char& ch : error)
      if (ch == '\t' || ch == '\n') ch = ' ';
    s += std::to_string(k) + "\t" + format_double(c.config.learning_rate) + "\t" + std::to_string(c.config.out_layers) +
         "\t" + std::to_string(c.config.rep_dim) + "\t" + format_double(c.config.alpha) + "\t" +
         format_double(c.config.lambda) + "\t" + (c.ok ? "ok" : "failed") + "\t" +
         (c.ok ? format_double(c.valid_mse) : "NA") + "\t" + (c.ok ? std::to_string(c.selected_epoch) : "NA") + "\t" +
         (k == result.winner ? "1" : "0") + "\t" + (error.empty() ? "-" : error) + "\n";
  }
  return s;
}

}  // namespace netdeconf::cli
