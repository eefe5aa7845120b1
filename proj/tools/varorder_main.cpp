#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "varorder/errors.hpp"
#include "varorder/runner.hpp"
#include "varorder/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Environmental variability experiments for matrix population models"};
  app.set_version_flag("--version", varorder::kVersion);

  varorder::RunOptions options;
  std::string modes_help;
  for (const auto& m : varorder::known_modes())
    modes_help += (modes_help.empty() ? "" : ", ") + m;

  app.add_option("mode", options.mode, "One of: " + modes_help)->required();
  app.add_option("--config", options.config_path, "Experiment config file")
      ->required();
  app.add_option("--out-dir", options.out_dir, "Directory for outputs (default .)");
  app.add_flag("--allow-linear", options.allow_linear,
               "Run the variability comparison even when affine entries break "
               "the log-convexity hypothesis");
  app.add_option("--threads", options.threads, "Worker threads (results identical)")
      ->check(CLI::Range(1, 256));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const varorder::RunResult result = varorder::run_experiment(options);
    if (result.exit_code != 0 && result.manifest.contains("error")) {
      std::fprintf(stderr, "error [%s]: %s\n",
                   result.manifest["error"]["code"].get<std::string>().c_str(),
                   result.manifest["error"]["message"].get<std::string>().c_str());
    }
    return result.exit_code;
  } catch (const varorder::ValidationError& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    return 2;
  } catch (const varorder::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
