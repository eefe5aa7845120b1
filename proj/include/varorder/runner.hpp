#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "varorder/analysis.hpp"

namespace varorder {

// Everything the CLI passes through to a run.
struct RunOptions {
  std::string mode;
  std::filesystem::path config_path;
  std::filesystem::path out_dir = ".";
  bool allow_linear = false;
  int threads = 1;
};

struct RunResult {
  int exit_code = 0;
  nlohmann::json manifest;
};

// Executes one experiment end to end: parse config, run the mode, write
// outputs atomically into out_dir. The manifest is written whenever the
// config parses, even if the run itself fails; sibling outputs carry no
// timing or thread information, so reruns at any thread count are
// byte-identical.
RunResult run_experiment(const RunOptions& options);

// plot.csv rows: t, mean_N_low, ci_low, mean_N_high, ci_high,
// mean_logN_low, mean_logN_high.
void emit_plot_data(const TrajectoryStats& low, const TrajectoryStats& high,
                    std::ostream& out);

const std::vector<std::string>& known_modes();

}  // namespace varorder
