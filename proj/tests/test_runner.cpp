#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "varorder/distribution.hpp"
#include "varorder/errors.hpp"
#include "varorder/io.hpp"
#include "varorder/runner.hpp"

using namespace varorder;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("varorder_runner_" + std::to_string(counter.fetch_add(1)) + "_" +
            std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path file(const std::string& name) const { return path / name; }
};

fs::path write_cfg(const TempDir& dir, const std::string& text) {
  const fs::path p = dir.file("exp.cfg");
  write_text_file_atomic(p, text);
  return p;
}

json read_json(const fs::path& p) { return json::parse(read_text_file(p)); }

const std::string kScalarExpModel =
    "model.dim = 1\n"
    "model.entry.1.1 = expaffine:0.02,0:1\n"
    "noise.var = 0.04\n";

}  // namespace

TEST_CASE("simulate writes stats, report, and manifest") {
  TempDir dir;
  const auto cfg = write_cfg(dir, kScalarExpModel +
                                      "run.mode = simulate\n"
                                      "run.horizon = 3\n"
                                      "run.replicates = 64\n"
                                      "run.seed = 7\n");
  RunOptions opt;
  opt.mode = "simulate";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");
  const auto result = run_experiment(opt);

  CHECK(result.exit_code == 0);
  CHECK(result.manifest["status"] == "ok");
  CHECK(result.manifest["version"] == "0.1.0");
  CHECK(result.manifest["mode"] == "simulate");
  CHECK(result.manifest["seed"] == 7);
  CHECK(result.manifest["config_hash"].get<std::string>().size() == 16);
  CHECK(result.manifest["outputs"] ==
        json::array({"stats.csv", "report.json"}));
  CHECK(result.manifest.contains("wall_clock_seconds"));

  const std::string stats = read_text_file(dir.file("out") / "stats.csv");
  CHECK(stats.rfind("t,mean_N,var_N,ci_N,mean_logN,var_logN,ci_logN\n", 0) == 0);
  CHECK(std::count(stats.begin(), stats.end(), '\n') == 5);

  const json report = read_json(dir.file("out") / "report.json");
  CHECK(report["mode"] == "simulate");
  CHECK(report["horizon"] == 3);
  CHECK(report["replicates"] == 64);
  CHECK(report["final_mean_N"] ==
        result.manifest["summary"]["final_mean_N"]);

  const json manifest = read_json(dir.file("out") / "manifest.json");
  CHECK(manifest["config_hash"] == result.manifest["config_hash"]);
}

TEST_CASE("paired run outputs are identical at any thread count") {
  TempDir dir;
  const auto cfg = write_cfg(dir, kScalarExpModel +
                                      "run.horizon = 4\n"
                                      "run.replicates = 256\n"
                                      "run.seed = 3\n"
                                      "run.stop_loss_thresholds = 10\n");
  RunOptions opt;
  opt.mode = "verify-proposition";
  opt.config_path = cfg;

  opt.out_dir = dir.file("serial");
  opt.threads = 1;
  REQUIRE(run_experiment(opt).exit_code == 0);

  opt.out_dir = dir.file("parallel");
  opt.threads = 2;
  REQUIRE(run_experiment(opt).exit_code == 0);

  for (const std::string name : {"stats.csv", "plot.csv", "report.json"})
    CHECK(read_text_file(dir.file("serial") / name) ==
          read_text_file(dir.file("parallel") / name));

  const std::string plot = read_text_file(dir.file("serial") / "plot.csv");
  CHECK(plot.rfind(
            "t,mean_N_low,ci_low,mean_N_high,ci_high,mean_logN_low,mean_logN_high\n",
            0) == 0);
  CHECK(std::count(plot.begin(), plot.end(), '\n') == 6);

  const std::string stats = read_text_file(dir.file("serial") / "stats.csv");
  CHECK(stats.rfind("t,mean_N_low,var_N_low,ci_N_low,", 0) == 0);

  const json report = read_json(dir.file("serial") / "report.json");
  CHECK(report["all_means_ordered_N"] == true);
  CHECK(report["stop_loss_dominance"] == true);
  CHECK(report["coupling"] == "dilation");
  CHECK(report["dilation_factor"] == 1.5);
  CHECK(report["stop_loss"]["threshold"].size() == 10);
  CHECK(report["per_time"]["diff_mean_N"].size() == 5);
  CHECK(read_json(dir.file("parallel") / "manifest.json")["threads"] == 2);
}

TEST_CASE("order comparison reads inline and file distributions") {
  TempDir dir;
  write_text_file_atomic(dir.file("x.csv"),
                         DiscreteDistribution::point_mass(10.0).to_csv());
  const auto cfg = write_cfg(dir,
                             "orders.kind = icx\n"
                             "orders.x_file = x.csv\n"
                             "orders.y = 0:0.5, 18:0.5\n");
  RunOptions opt;
  opt.mode = "compare-orders";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");
  const auto result = run_experiment(opt);

  CHECK(result.exit_code == 0);
  const json report = read_json(dir.file("out") / "report.json");
  CHECK(report["kind"] == "icx");
  CHECK(report["verdict"]["relation"] == "not_comparable");
  CHECK(report["verdict"].contains("witness_less"));
  CHECK(report["verdict"].contains("witness_greater"));
  CHECK(report["x"]["atoms"] == 1);
  CHECK(report["x"]["mean"] == 10.0);
  CHECK(report["y"]["atoms"] == 2);

  const auto cfg2 = write_cfg(dir,
                              "orders.kind = cx\n"
                              "orders.x = 1:1\n"
                              "orders.y = 0:0.5, 2:0.5\n");
  opt.config_path = cfg2;
  opt.out_dir = dir.file("out2");
  REQUIRE(run_experiment(opt).exit_code == 0);
  const json report2 = read_json(dir.file("out2") / "report.json");
  CHECK(report2["verdict"]["relation"] == "less");
}

TEST_CASE("growth rate mode") {
  TempDir dir;
  const auto cfg = write_cfg(dir, kScalarExpModel +
                                      "run.horizon = 2000\n"
                                      "run.seed = 5\n"
                                      "growth.batches = 10\n");
  RunOptions opt;
  opt.mode = "growth-rate";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");
  const auto result = run_experiment(opt);

  CHECK(result.exit_code == 0);
  const json report = read_json(dir.file("out") / "report.json");
  CHECK(report["primitive_mean_matrix"] == true);
  CHECK(report["batches"] == 10);
  CHECK(report["se"].get<double>() > 0.0);
  CHECK(std::abs(report["log_lambda_s"].get<double>() - 0.02) < 0.02);
}

TEST_CASE("small noise approximation mode") {
  TempDir dir;
  const auto cfg = write_cfg(dir,
                             "model.dim = 1\n"
                             "model.entry.1.1 = affine:1.05,0:1\n"
                             "noise.var = 0.0001\n");
  RunOptions opt;
  opt.mode = "approx";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");
  const auto result = run_experiment(opt);

  CHECK(result.exit_code == 0);
  const json report = read_json(dir.file("out") / "report.json");
  CHECK(report["lambda1"].get<double>() == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(report["tau_sq"].get<double>() == doctest::Approx(1e-4).epsilon(1e-10));
  CHECK(report["theta"].get<double>() == 0.0);
  CHECK(report["log_lambda_s"].get<double>() ==
        doctest::Approx(std::log(1.05) - 1e-4 / (2.0 * 1.05 * 1.05)).epsilon(1e-12));
}

TEST_CASE("probe mode reports linear entries with witnesses") {
  TempDir dir;
  const auto cfg = write_cfg(dir,
                             "model.dim = 1\n"
                             "model.entry.1.1 = affine:1,0:1\n"
                             "probe.box.lo = -0.5\n"
                             "probe.box.hi = 0.5\n"
                             "probe.entry_trials = 2000\n"
                             "probe.scenario_trials = 200\n"
                             "probe.horizon = 2\n"
                             "run.seed = 9\n");
  RunOptions opt;
  opt.mode = "probe-convexity";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");
  const auto result = run_experiment(opt);

  // a finding is a result, not a failure
  CHECK(result.exit_code == 0);
  const json report = read_json(dir.file("out") / "report.json");
  CHECK(report["all_pass"] == false);
  REQUIRE(report["entries"].size() == 1);
  CHECK(report["entries"][0]["pass"] == false);
  CHECK(report["entries"][0]["row"] == 1);
  CHECK(report["entries"][0]["witness"]["functional"] == "log_entry");
  CHECK(report["scenario"]["pass"] == false);
  CHECK(report["scenario"].contains("witness"));
}

TEST_CASE("probe mode passes log convex models and skips structural zeros") {
  TempDir dir;
  const auto cfg = write_cfg(dir,
                             "model.dim = 2\n"
                             "model.entry.1.2 = expaffine:-0.1,0:1\n"
                             "model.entry.2.1 = const:0.8\n"
                             "probe.target = entries\n"
                             "probe.box.lo = -1\n"
                             "probe.box.hi = 1\n"
                             "probe.entry_trials = 2000\n");
  RunOptions opt;
  opt.mode = "probe-convexity";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");
  const auto result = run_experiment(opt);

  CHECK(result.exit_code == 0);
  const json report = read_json(dir.file("out") / "report.json");
  CHECK(report["all_pass"] == true);
  REQUIRE(report["entries"].size() == 2);
  CHECK_FALSE(report["entries"][0].contains("witness"));
  CHECK_FALSE(report.contains("scenario"));
}

TEST_CASE("config and command line must agree on the mode") {
  TempDir dir;
  const auto cfg = write_cfg(dir, kScalarExpModel +
                                      "run.mode = simulate\n"
                                      "run.horizon = 2\n"
                                      "run.replicates = 8\n");
  RunOptions opt;
  opt.mode = "approx";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");
  const auto result = run_experiment(opt);

  CHECK(result.exit_code == 2);
  CHECK(result.manifest["status"] == "error");
  CHECK(result.manifest["error"]["code"] == "ConfigParseError");
  const std::string msg = result.manifest["error"]["message"];
  CHECK(msg.find("simulate") != std::string::npos);
  CHECK(msg.find("approx") != std::string::npos);
  CHECK(result.manifest["outputs"].empty());
  CHECK(fs::exists(dir.file("out") / "manifest.json"));
}

TEST_CASE("unknown modes and unreadable configs fail before any output") {
  TempDir dir;
  RunOptions opt;
  opt.mode = "frobnicate";
  opt.config_path = write_cfg(dir, "a = 1\n");
  opt.out_dir = dir.file("out");
  CHECK_THROWS_AS(run_experiment(opt), ValidationError);

  opt.mode = "simulate";
  opt.config_path = dir.file("missing.cfg");
  CHECK_THROWS_AS(run_experiment(opt), ValidationError);
  CHECK_FALSE(fs::exists(dir.file("out")));
  CHECK(known_modes().size() == 6);
}

TEST_CASE("failures inside a run are recorded in the manifest") {
  TempDir dir;
  RunOptions opt;
  opt.out_dir = dir.file("out");

  opt.mode = "simulate";
  opt.config_path = write_cfg(dir, kScalarExpModel +
                                       "run.horizon = 2\n"
                                       "run.replicates = 0\n");
  auto result = run_experiment(opt);
  CHECK(result.exit_code == 2);
  CHECK(result.manifest["error"]["code"] == "InvalidSpec");

  opt.config_path = write_cfg(dir,
                              "model.dim = 1\n"
                              "model.entry.1.1 = const:0\n"
                              "noise.var = 1\n"
                              "run.horizon = 2\n"
                              "run.replicates = 4\n");
  result = run_experiment(opt);
  CHECK(result.exit_code == 3);
  CHECK(result.manifest["error"]["code"] == "ExtinctTrajectory");

  opt.config_path = write_cfg(dir, kScalarExpModel +
                                       "run.horizon = 2\n"
                                       "run.replicates = 4\n"
                                       "typo.key = 1\n");
  result = run_experiment(opt);
  CHECK(result.exit_code == 2);
  const std::string msg = result.manifest["error"]["message"];
  CHECK(msg.find("typo.key") != std::string::npos);
}

TEST_CASE("linear models need explicit permission in paired runs") {
  TempDir dir;
  const auto cfg = write_cfg(dir,
                             "model.dim = 1\n"
                             "model.entry.1.1 = affine:1,0:1\n"
                             "noise.var = 0.0001\n"
                             "run.horizon = 2\n"
                             "run.replicates = 16\n");
  RunOptions opt;
  opt.mode = "verify-proposition";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");

  auto result = run_experiment(opt);
  CHECK(result.exit_code == 2);
  CHECK(result.manifest["error"]["code"] == "HypothesisViolated");

  opt.allow_linear = true;
  opt.out_dir = dir.file("out2");
  result = run_experiment(opt);
  CHECK(result.exit_code == 0);
}

TEST_CASE("plot data requires matching horizons") {
  TrajectoryStats low, high;
  low.horizon = 1;
  low.mean_N = {1.0, 2.0};
  low.ci_N = {0.0, 0.1};
  low.mean_logN = {0.0, 0.5};
  high = low;

  std::ostringstream out;
  emit_plot_data(low, high, out);
  const std::string text = out.str();
  CHECK(text.rfind("t,mean_N_low,ci_low,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);

  high.horizon = 2;
  std::ostringstream other;
  CHECK_THROWS_AS(emit_plot_data(low, high, other), ValidationError);
}

TEST_CASE("the seed defaults to 42 in the manifest") {
  TempDir dir;
  const auto cfg = write_cfg(dir, kScalarExpModel +
                                      "run.horizon = 1\n"
                                      "run.replicates = 2\n");
  RunOptions opt;
  opt.mode = "simulate";
  opt.config_path = cfg;
  opt.out_dir = dir.file("out");
  const auto result = run_experiment(opt);
  CHECK(result.exit_code == 0);
  CHECK(result.manifest["seed"] == 42);
}
