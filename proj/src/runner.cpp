#include "varorder/runner.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "varorder/config.hpp"
#include "varorder/errors.hpp"
#include "varorder/io.hpp"
#include "varorder/orders.hpp"
#include "varorder/probes.hpp"
#include "varorder/version.hpp"

namespace varorder {

namespace {

using nlohmann::json;

json verdict_to_json(const OrderVerdict& v) {
  json j;
  j["relation"] = to_string(v.relation);
  if (v.witness_less) j["witness_less"] = *v.witness_less;
  if (v.witness_greater) j["witness_greater"] = *v.witness_greater;
  return j;
}

std::string stats_csv(const TrajectoryStats& s) {
  std::string out = "t,mean_N,var_N,ci_N,mean_logN,var_logN,ci_logN\n";
  for (int t = 0; t <= s.horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    out += std::to_string(t);
    for (const auto* col : {&s.mean_N, &s.var_N, &s.ci_N, &s.mean_logN, &s.var_logN,
                            &s.ci_logN})
      out += "," + fmt_double((*col)[i]);
    out += '\n';
  }
  return out;
}

std::string paired_stats_csv(const PropositionReport& r) {
  std::string out =
      "t,mean_N_low,var_N_low,ci_N_low,mean_logN_low,var_logN_low,ci_logN_low,"
      "mean_N_high,var_N_high,ci_N_high,mean_logN_high,var_logN_high,ci_logN_high,"
      "diff_mean_N,diff_ci_N,diff_mean_logN,diff_ci_logN,"
      "means_ordered_N,means_ordered_logN\n";
  for (int t = 0; t <= r.horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    out += std::to_string(t);
    for (const auto* col :
         {&r.low.mean_N, &r.low.var_N, &r.low.ci_N, &r.low.mean_logN, &r.low.var_logN,
          &r.low.ci_logN, &r.high.mean_N, &r.high.var_N, &r.high.ci_N,
          &r.high.mean_logN, &r.high.var_logN, &r.high.ci_logN, &r.diff_mean_N,
          &r.diff_ci_N, &r.diff_mean_logN, &r.diff_ci_logN})
      out += "," + fmt_double((*col)[i]);
    out += r.means_ordered_N[i] ? ",1" : ",0";
    out += r.means_ordered_logN[i] ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

json report_for_proposition(const PropositionReport& r) {
  json per_time;
  per_time["diff_mean_N"] = r.diff_mean_N;
  per_time["diff_ci_N"] = r.diff_ci_N;
  per_time["diff_mean_logN"] = r.diff_mean_logN;
  per_time["diff_ci_logN"] = r.diff_ci_logN;
  per_time["means_ordered_N"] = r.means_ordered_N;
  per_time["means_ordered_logN"] = r.means_ordered_logN;

  json stop_loss;
  stop_loss["threshold"] = r.sl_thresholds;
  stop_loss["diff_mean"] = r.sl_diff_mean;
  stop_loss["diff_ci"] = r.sl_diff_ci;
  stop_loss["holds"] = r.sl_holds;

  json j;
  j["mode"] = "verify-proposition";
  j["horizon"] = r.horizon;
  j["replicates"] = r.replicates;
  j["seed"] = r.seed;
  j["coupling"] = to_string(r.coupling);
  if (r.coupling == Coupling::Dilation) j["dilation_factor"] = r.dilation_factor;
  j["all_means_ordered_N"] = r.all_means_ordered_N;
  j["all_means_ordered_logN"] = r.all_means_ordered_logN;
  j["stop_loss_dominance"] = r.stop_loss_dominance;
  j["per_time"] = per_time;
  j["stop_loss"] = stop_loss;
  return j;
}

struct ModeOutputs {
  json report;
  json summary;
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
};

ModeOutputs run_simulate(ExperimentConfig& cfg, const RunOptions& opt) {
  const MatrixSpec spec = model_from_config(cfg);
  const PopulationVector n0 = population_from_config(cfg, spec.dim);
  const SizeFunctional f = size_from_config(cfg, spec.dim);
  const NoiseSpec noise = noise_from_config(cfg, "noise.", spec.factor_dim);
  const int horizon = static_cast<int>(cfg.get_long("run.horizon"));
  const long replicates = cfg.get_long("run.replicates");
  const std::uint64_t seed = cfg.get_u64("run.seed", 42);
  cfg.require_all_used();

  EnsembleOptions eopt;
  eopt.threads = opt.threads;
  const TrajectoryStats stats =
      run_ensemble(spec, n0, f, noise, horizon, replicates, seed, eopt);

  ModeOutputs out;
  out.files.emplace_back("stats.csv", stats_csv(stats));
  json j;
  j["mode"] = "simulate";
  j["horizon"] = stats.horizon;
  j["replicates"] = stats.replicates;
  j["seed"] = seed;
  j["final_mean_N"] = stats.mean_N.back();
  j["final_mean_logN"] = stats.mean_logN.back();
  out.report = j;
  out.summary = {{"final_mean_N", stats.mean_N.back()},
                 {"final_mean_logN", stats.mean_logN.back()}};
  return out;
}

ModeOutputs run_verify(ExperimentConfig& cfg, const RunOptions& opt) {
  const MatrixSpec spec = model_from_config(cfg);
  const PopulationVector n0 = population_from_config(cfg, spec.dim);
  const SizeFunctional f = size_from_config(cfg, spec.dim);
  const NoiseSpec noise = noise_from_config(cfg, "noise.", spec.factor_dim);
  const CouplingSpec coupling = coupling_from_config(cfg, spec.factor_dim);
  const int horizon = static_cast<int>(cfg.get_long("run.horizon"));
  const long replicates = cfg.get_long("run.replicates");
  const std::uint64_t seed = cfg.get_u64("run.seed", 42);
  const int thresholds = static_cast<int>(cfg.get_long("run.stop_loss_thresholds", 50));
  cfg.require_all_used();

  EnsembleOptions eopt;
  eopt.threads = opt.threads;
  const PropositionReport rep =
      verify_proposition(spec, n0, f, noise, coupling, horizon, replicates, seed,
                         opt.allow_linear, eopt, thresholds);

  ModeOutputs out;
  out.files.emplace_back("stats.csv", paired_stats_csv(rep));
  std::ostringstream plot;
  emit_plot_data(rep.low, rep.high, plot);
  out.files.emplace_back("plot.csv", plot.str());
  out.report = report_for_proposition(rep);
  out.summary = {{"all_means_ordered_N", rep.all_means_ordered_N},
                 {"all_means_ordered_logN", rep.all_means_ordered_logN},
                 {"stop_loss_dominance", rep.stop_loss_dominance}};
  return out;
}

ModeOutputs run_compare_orders(ExperimentConfig& cfg, const RunOptions&) {
  const std::string kind = cfg.get_string("orders.kind", "icx");
  if (kind != "icx" && kind != "cx")
    throw ValidationError("ConfigParseError", "orders.kind must be icx or cx");
  const double tol = cfg.get_double("orders.tol", kOrderTol);

  const auto load = [&](const std::string& side) {
    const std::string file_key = "orders." + side + "_file";
    if (cfg.has(file_key))
      return DiscreteDistribution::from_csv(
          read_text_file(cfg.resolve(cfg.get_string(file_key))));
    return distribution_from_config(cfg, "orders." + side);
  };
  const DiscreteDistribution x = load("x");
  const DiscreteDistribution y = load("y");
  cfg.require_all_used();

  const OrderVerdict v = kind == "icx" ? icx_compare(x, y, tol) : cx_compare(x, y, tol);

  ModeOutputs out;
  json j;
  j["mode"] = "compare-orders";
  j["kind"] = kind;
  j["tolerance"] = tol;
  j["verdict"] = verdict_to_json(v);
  j["x"] = {{"mean", x.mean()}, {"variance", x.variance()}, {"atoms", x.size()}};
  j["y"] = {{"mean", y.mean()}, {"variance", y.variance()}, {"atoms", y.size()}};
  out.report = j;
  out.summary = {{"relation", to_string(v.relation)}};
  return out;
}

ModeOutputs run_growth_rate(ExperimentConfig& cfg, const RunOptions&) {
  const MatrixSpec spec = model_from_config(cfg);
  const PopulationVector n0 = population_from_config(cfg, spec.dim);
  const NoiseSpec noise = noise_from_config(cfg, "noise.", spec.factor_dim);
  const long horizon = cfg.get_long("run.horizon");
  const std::uint64_t seed = cfg.get_u64("run.seed", 42);
  const int batches = static_cast<int>(cfg.get_long("growth.batches", 20));
  cfg.require_all_used();

  const GrowthRateEstimate est =
      estimate_stochastic_growth_rate(spec, n0, noise, horizon, seed, batches);

  ModeOutputs out;
  json j;
  j["mode"] = "growth-rate";
  j["log_lambda_s"] = est.log_lambda_s;
  j["se"] = est.se;
  j["horizon"] = est.horizon;
  j["batches"] = est.batches;
  j["primitive_mean_matrix"] = est.primitive_mean_matrix;
  out.report = j;
  out.summary = {{"log_lambda_s", est.log_lambda_s}, {"se", est.se}};
  return out;
}

ModeOutputs run_approx(ExperimentConfig& cfg, const RunOptions&) {
  const MatrixSpec spec = model_from_config(cfg);
  const NoiseSpec noise = noise_from_config(cfg, "noise.", spec.factor_dim);
  cfg.require_all_used();

  const TuljapurkarApprox approx = tuljapurkar_approx(spec, noise);

  ModeOutputs out;
  json j;
  j["mode"] = "approx";
  j["lambda1"] = approx.lambda1;
  j["tau_sq"] = approx.tau_sq;
  j["theta"] = approx.theta;
  j["log_lambda_s"] = approx.log_lambda_s;
  out.report = j;
  out.summary = {{"log_lambda_s", approx.log_lambda_s}, {"lambda1", approx.lambda1}};
  return out;
}

json witness_to_json(const ConvexityWitness& w) {
  json j;
  j["functional"] = w.functional;
  j["lambda"] = w.lambda;
  j["lhs"] = w.lhs;
  j["rhs"] = w.rhs;
  j["x"] = std::vector<double>(w.x.data(), w.x.data() + w.x.size());
  j["y"] = std::vector<double>(w.y.data(), w.y.data() + w.y.size());
  return j;
}

ModeOutputs run_probe(ExperimentConfig& cfg, const RunOptions&) {
  const MatrixSpec spec = model_from_config(cfg);
  const std::string target = cfg.get_string("probe.target", "both");
  if (target != "entries" && target != "scenario" && target != "both")
    throw ValidationError("ConfigParseError",
                          "probe.target must be entries, scenario, or both");
  const std::uint64_t seed = cfg.get_u64("run.seed", 42);
  const auto lo = cfg.get_doubles("probe.box.lo");
  const auto hi = cfg.get_doubles("probe.box.hi");
  if (static_cast<int>(lo.size()) != spec.factor_dim ||
      static_cast<int>(hi.size()) != spec.factor_dim)
    throw ValidationError("ConfigParseError",
                          "probe.box bounds need one entry per environment factor");
  Eigen::VectorXd vlo(spec.factor_dim), vhi(spec.factor_dim);
  for (int i = 0; i < spec.factor_dim; ++i) {
    vlo[i] = lo[static_cast<std::size_t>(i)];
    vhi[i] = hi[static_cast<std::size_t>(i)];
  }
  const Box box(vlo, vhi);

  ModeOutputs out;
  json j;
  j["mode"] = "probe-convexity";
  bool all_pass = true;

  if (target != "scenario") {
    const long trials = cfg.get_long("probe.entry_trials", 100000);
    json entries = json::array();
    for (int i = 0; i < spec.dim; ++i)
      for (int k = 0; k < spec.dim; ++k) {
        const EntryFunction& e = spec.entry(i, k);
        if (e.kind() == EntryFunction::Kind::Constant && e.constant_value() == 0.0)
          continue;  // structural zero
        const ProbeResult r = logconvexity_probe(e, box, trials, seed);
        json je;
        je["row"] = i + 1;
        je["col"] = k + 1;
        je["entry"] = e.to_string();
        je["pass"] = r.pass;
        je["trials"] = r.trials_run;
        if (r.witness) je["witness"] = witness_to_json(*r.witness);
        entries.push_back(je);
        all_pass = all_pass && r.pass;
      }
    j["entries"] = entries;
  }

  if (target != "entries") {
    const long trials = cfg.get_long("probe.scenario_trials", 2000);
    const int horizon = static_cast<int>(cfg.get_long("probe.horizon", 10));
    const PopulationVector n0 = population_from_config(cfg, spec.dim);
    const SizeFunctional f = size_from_config(cfg, spec.dim);
    const ProbeResult r =
        scenario_convexity_probe(spec, n0, f, horizon, box, trials, seed);
    json js;
    js["pass"] = r.pass;
    js["trials"] = r.trials_run;
    js["horizon"] = horizon;
    if (r.witness) js["witness"] = witness_to_json(*r.witness);
    j["scenario"] = js;
    all_pass = all_pass && r.pass;
  }

  cfg.require_all_used();
  j["all_pass"] = all_pass;
  out.report = j;
  out.summary = {{"all_pass", all_pass}};
  return out;
}

}  // namespace

void emit_plot_data(const TrajectoryStats& low, const TrajectoryStats& high,
                    std::ostream& out) {
  if (low.horizon != high.horizon)
    throw ValidationError("HorizonMismatch", "trajectory stats cover different horizons");
  out << "t,mean_N_low,ci_low,mean_N_high,ci_high,mean_logN_low,mean_logN_high\n";
  for (int t = 0; t <= low.horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    out << t << ',' << fmt_double_short(low.mean_N[i]) << ','
        << fmt_double_short(low.ci_N[i]) << ',' << fmt_double_short(high.mean_N[i])
        << ',' << fmt_double_short(high.ci_N[i]) << ','
        << fmt_double_short(low.mean_logN[i]) << ','
        << fmt_double_short(high.mean_logN[i]) << '\n';
  }
}

const std::vector<std::string>& known_modes() {
  static const std::vector<std::string> modes = {
      "simulate",    "verify-proposition", "compare-orders",
      "growth-rate", "approx",             "probe-convexity"};
  return modes;
}

RunResult run_experiment(const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;

  json manifest;
  manifest["version"] = kVersion;
  manifest["mode"] = options.mode;
  manifest["threads"] = options.threads;

  if (std::find(known_modes().begin(), known_modes().end(), options.mode) ==
      known_modes().end())
    throw ValidationError("ConfigParseError", "unknown mode '" + options.mode + "'");

  // Config parse failures propagate: without a parsed config there is no
  // trustworthy place to put a manifest.
  ExperimentConfig cfg = ExperimentConfig::parse_file(options.config_path);
  manifest["config_hash"] = cfg.hash_hex();
  manifest["seed"] = cfg.get_u64("run.seed", 42);

  const std::string cfg_mode = cfg.get_string("run.mode", options.mode);
  std::vector<std::string> output_names;

  try {
    if (cfg_mode != options.mode)
      throw ValidationError("ConfigParseError", "config says run.mode = " + cfg_mode +
                                                    ", command line says " + options.mode);

    ModeOutputs out;
    if (options.mode == "simulate") out = run_simulate(cfg, options);
    else if (options.mode == "verify-proposition") out = run_verify(cfg, options);
    else if (options.mode == "compare-orders") out = run_compare_orders(cfg, options);
    else if (options.mode == "growth-rate") out = run_growth_rate(cfg, options);
    else if (options.mode == "approx") out = run_approx(cfg, options);
    else out = run_probe(cfg, options);

    std::filesystem::create_directories(options.out_dir);
    for (const auto& [name, content] : out.files) {
      write_text_file_atomic(options.out_dir / name, content);
      output_names.push_back(name);
    }
    write_text_file_atomic(options.out_dir / "report.json", out.report.dump(2) + "\n");
    output_names.push_back("report.json");

    manifest["status"] = "ok";
    manifest["summary"] = out.summary;
    result.exit_code = 0;
  } catch (const Error& e) {
    manifest["status"] = "error";
    manifest["error"] = {{"code", e.code()}, {"message", e.what()}};
    result.exit_code = dynamic_cast<const ValidationError*>(&e) ? 2 : 3;
  }

  const auto t1 = std::chrono::steady_clock::now();
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(t1 - t0).count();
  manifest["outputs"] = output_names;

  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (!ec) write_text_file_atomic(options.out_dir / "manifest.json",
                                  manifest.dump(2) + "\n");
  output_names.push_back("manifest.json");

  result.manifest = manifest;
  return result;
}

}  // namespace varorder
