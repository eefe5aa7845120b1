#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <utility>
#include <vector>

#include "varorder/analysis.hpp"
#include "varorder/distribution.hpp"
#include "varorder/entry_function.hpp"
#include "varorder/errors.hpp"
#include "varorder/matrix_model.hpp"
#include "varorder/orders.hpp"
#include "varorder/probes.hpp"
#include "varorder/rng.hpp"
#include "varorder/scenario.hpp"
#include "varorder/version.hpp"

namespace py = pybind11;
using namespace varorder;

namespace {

std::vector<EntryFunction::Term> to_terms(
    const std::vector<std::pair<int, double>>& pairs) {
  std::vector<EntryFunction::Term> terms;
  terms.reserve(pairs.size());
  for (const auto& [factor, coef] : pairs) terms.push_back({factor, coef});
  return terms;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Convex stochastic orders and environmental variability in matrix "
      "population models";
  m.attr("__version__") = kVersion;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const SimulationError& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform01", &Rng::uniform01)
      .def("uniform", &Rng::uniform, py::arg("lo"), py::arg("hi"))
      .def("normal", &Rng::normal);
  m.def("replicate_seed", &replicate_seed, py::arg("base"), py::arg("index"));

  py::class_<DiscreteDistribution>(m, "DiscreteDistribution")
      .def(py::init([](const std::vector<std::pair<double, double>>& atoms) {
             std::vector<Atom> a;
             a.reserve(atoms.size());
             for (const auto& [v, p] : atoms) a.push_back({v, p});
             return DiscreteDistribution(std::move(a));
           }),
           py::arg("atoms"))
      .def_static("point_mass", &DiscreteDistribution::point_mass, py::arg("value"))
      .def_static("uniform", &DiscreteDistribution::uniform, py::arg("values"))
      .def_property_readonly("atoms",
                             [](const DiscreteDistribution& d) {
                               std::vector<std::pair<double, double>> out;
                               for (const Atom& a : d.atoms())
                                 out.emplace_back(a.value, a.probability);
                               return out;
                             })
      .def("__len__", &DiscreteDistribution::size)
      .def("mean", &DiscreteDistribution::mean)
      .def("variance", &DiscreteDistribution::variance)
      .def("min_value", &DiscreteDistribution::min_value)
      .def("max_value", &DiscreteDistribution::max_value)
      .def("sample", &DiscreteDistribution::sample, py::arg("rng"))
      .def("to_csv", &DiscreteDistribution::to_csv)
      .def_static("from_csv", &DiscreteDistribution::from_csv, py::arg("text"));

  py::class_<EmpiricalSample>(m, "EmpiricalSample")
      .def(py::init([](std::vector<double> draws) {
             return EmpiricalSample{std::move(draws)};
           }),
           py::arg("draws"))
      .def_readonly("draws", &EmpiricalSample::draws)
      .def("to_distribution", &EmpiricalSample::to_distribution)
      .def("mean", &EmpiricalSample::mean);

  m.def("stop_loss", &stop_loss, py::arg("distribution"), py::arg("threshold"));
  m.def("lower_stop_loss", &lower_stop_loss, py::arg("distribution"),
        py::arg("threshold"));
  m.def("cv_p", &cv_p, py::arg("distribution"), py::arg("p"));
  m.def("convolve", &convolve, py::arg("x"), py::arg("y"));

  py::enum_<Relation>(m, "Relation")
      .value("Less", Relation::Less)
      .value("Greater", Relation::Greater)
      .value("Equal", Relation::Equal)
      .value("NotComparable", Relation::NotComparable);

  py::class_<OrderVerdict>(m, "OrderVerdict")
      .def_readonly("relation", &OrderVerdict::relation)
      .def_readonly("witness_less", &OrderVerdict::witness_less)
      .def_readonly("witness_greater", &OrderVerdict::witness_greater);

  m.attr("ORDER_TOL") = kOrderTol;
  m.def("icx_compare", &icx_compare, py::arg("x"), py::arg("y"),
        py::arg("tol") = kOrderTol);
  m.def("cx_compare", &cx_compare, py::arg("x"), py::arg("y"),
        py::arg("tol") = kOrderTol);

  py::class_<NormalSpec>(m, "NormalSpec")
      .def(py::init<double, double>(), py::arg("mean"), py::arg("variance"))
      .def_readonly("mean", &NormalSpec::mean)
      .def_readonly("variance", &NormalSpec::variance);
  m.def("normal_stop_loss", &normal_stop_loss, py::arg("x"), py::arg("threshold"));
  m.def("normal_icx_compare", &normal_icx_compare, py::arg("x"), py::arg("y"),
        py::arg("tol") = kOrderTol);
  m.def("normal_cx_compare", &normal_cx_compare, py::arg("x"), py::arg("y"),
        py::arg("tol") = kOrderTol);

  py::class_<MvNormalSpec>(m, "MvNormalSpec")
      .def(py::init<Eigen::VectorXd, Eigen::MatrixXd>(), py::arg("mean"),
           py::arg("covariance"))
      .def_readonly("mean", &MvNormalSpec::mean)
      .def_readonly("covariance", &MvNormalSpec::covariance)
      .def("dim", &MvNormalSpec::dim);
  m.def("mvnormal_cx_compare", &mvnormal_cx_compare, py::arg("x"), py::arg("y"),
        py::arg("tol") = kOrderTol);

  py::enum_<IcxEvidenceKind>(m, "IcxEvidenceKind")
      .value("SufficientHolds", IcxEvidenceKind::SufficientHolds)
      .value("NecessaryHolds", IcxEvidenceKind::NecessaryHolds)
      .value("NecessaryFails", IcxEvidenceKind::NecessaryFails);

  py::class_<MvIcxEvidence>(m, "MvIcxEvidence")
      .def_readonly("kind", &MvIcxEvidence::kind)
      .def_readonly("direction", &MvIcxEvidence::direction)
      .def_readonly("mean_gap", &MvIcxEvidence::mean_gap)
      .def_readonly("quad_gap", &MvIcxEvidence::quad_gap);
  m.def("mvnormal_icx_evidence", &mvnormal_icx_evidence, py::arg("x"), py::arg("y"),
        py::arg("tol") = kOrderTol, py::arg("seed") = 20240915,
        py::arg("random_directions") = 1000);

  py::class_<TestFunctionFamily>(m, "TestFunctionFamily")
      .def_static("simplex_grid", &TestFunctionFamily::simplex_grid, py::arg("dim"),
                  py::arg("divisions") = 16, py::arg("random_directions") = 64,
                  py::arg("seed") = 20240915)
      .def_readonly("directions", &TestFunctionFamily::directions)
      .def_readwrite("thresholds_per_direction",
                     &TestFunctionFamily::thresholds_per_direction);

  py::class_<VecOrderEvidence>(m, "VecOrderEvidence")
      .def_readonly("falsified", &VecOrderEvidence::falsified)
      .def_readonly("direction", &VecOrderEvidence::direction)
      .def_readonly("threshold", &VecOrderEvidence::threshold)
      .def_readonly("mean_first", &VecOrderEvidence::mean_first)
      .def_readonly("mean_second", &VecOrderEvidence::mean_second)
      .def_readonly("z_score", &VecOrderEvidence::z_score);
  m.def("empirical_icx_evidence_vec", &empirical_icx_evidence_vec, py::arg("xs"),
        py::arg("ys"), py::arg("family"), py::arg("z_margin") = 4.0);

  py::class_<EntryFunction> entry(m, "EntryFunction");
  py::enum_<EntryFunction::Kind>(entry, "Kind")
      .value("Constant", EntryFunction::Kind::Constant)
      .value("Affine", EntryFunction::Kind::Affine)
      .value("ExpAffine", EntryFunction::Kind::ExpAffine)
      .value("NonnegCombination", EntryFunction::Kind::NonnegCombination);
  entry
      .def_static("parse", &EntryFunction::parse, py::arg("text"))
      .def_static("constant", &EntryFunction::constant, py::arg("value"))
      .def_static("affine",
                  [](double base, const std::vector<std::pair<int, double>>& terms) {
                    return EntryFunction::affine(base, to_terms(terms));
                  },
                  py::arg("base"), py::arg("terms"))
      .def_static("exp_affine",
                  [](double base, const std::vector<std::pair<int, double>>& terms) {
                    return EntryFunction::exp_affine(base, to_terms(terms));
                  },
                  py::arg("base"), py::arg("terms"))
      .def_static("nonneg_combination", &EntryFunction::nonneg_combination,
                  py::arg("weights"), py::arg("atoms"))
      .def("evaluate", &EntryFunction::evaluate, py::arg("eps"))
      .def("kind", &EntryFunction::kind)
      .def("max_factor_index", &EntryFunction::max_factor_index)
      .def("strictly_positive", &EntryFunction::strictly_positive)
      .def("hypothesis_violating", &EntryFunction::hypothesis_violating)
      .def("affine_base", &EntryFunction::affine_base)
      .def("affine_coefficients", &EntryFunction::affine_coefficients,
           py::arg("factor_dim"))
      .def("__str__", &EntryFunction::to_string)
      .def("__repr__", [](const EntryFunction& e) {
        return "EntryFunction(\"" + e.to_string() + "\")";
      });

  py::class_<MatrixSpec>(m, "MatrixSpec")
      .def(py::init<int, int, std::vector<EntryFunction>>(), py::arg("dim"),
           py::arg("factor_dim"), py::arg("entries"))
      .def_readonly("dim", &MatrixSpec::dim)
      .def_readonly("factor_dim", &MatrixSpec::factor_dim)
      .def("entry", &MatrixSpec::entry, py::arg("i"), py::arg("j"),
           py::return_value_policy::copy)
      .def("has_affine_entries", &MatrixSpec::has_affine_entries)
      .def("all_linear", &MatrixSpec::all_linear);

  py::class_<PopulationVector>(m, "PopulationVector")
      .def(py::init<Eigen::VectorXd>(), py::arg("abundances"))
      .def_readonly("abundances", &PopulationVector::abundances)
      .def("dim", &PopulationVector::dim);

  py::class_<SizeFunctional>(m, "SizeFunctional")
      .def(py::init<Eigen::VectorXd, bool>(), py::arg("weights"),
           py::arg("log_scale") = false)
      .def_static("total", &SizeFunctional::total, py::arg("dim"),
                  py::arg("log_scale") = false)
      .def_readonly("weights", &SizeFunctional::weights)
      .def_readonly("log_scale", &SizeFunctional::log_scale);

  m.def("evaluate_matrix", &evaluate_matrix, py::arg("spec"), py::arg("eps"));
  m.def("propagate", &propagate, py::arg("spec"), py::arg("n0"), py::arg("scenario"));
  m.def("size", &size, py::arg("n"), py::arg("functional"));
  m.def("is_primitive", &is_primitive, py::arg("matrix"));

  py::class_<LogTrajectory>(m, "LogTrajectory")
      .def_readonly("log_size", &LogTrajectory::log_size)
      .def_readonly("log_norm", &LogTrajectory::log_norm)
      .def_readonly("final_direction", &LogTrajectory::final_direction);
  m.def("propagate_log", &propagate_log, py::arg("spec"), py::arg("n0"),
        py::arg("scenario"), py::arg("functional"));

  py::class_<Scenario>(m, "Scenario")
      .def(py::init([](Eigen::MatrixXd factors) {
             return Scenario{std::move(factors)};
           }),
           py::arg("factors"))
      .def_readonly("factors", &Scenario::factors)
      .def("horizon", &Scenario::horizon)
      .def("factor_dim", &Scenario::factor_dim);

  py::class_<NoiseSpec> noise(m, "NoiseSpec");
  py::enum_<NoiseSpec::Kind>(noise, "Kind")
      .value("IidNormal", NoiseSpec::Kind::IidNormal)
      .value("IidDiscrete", NoiseSpec::Kind::IidDiscrete)
      .value("Ar1Normal", NoiseSpec::Kind::Ar1Normal);
  noise
      .def_static("iid_normal", &NoiseSpec::iid_normal, py::arg("mean"),
                  py::arg("covariance"))
      .def_static("iid_discrete", &NoiseSpec::iid_discrete, py::arg("components"))
      .def_static("ar1_normal", &NoiseSpec::ar1_normal, py::arg("mean"),
                  py::arg("stationary_cov"), py::arg("rho"))
      .def("kind", &NoiseSpec::kind)
      .def("factor_dim", &NoiseSpec::factor_dim)
      .def("mean", &NoiseSpec::mean)
      .def("covariance", &NoiseSpec::covariance)
      .def("rho", &NoiseSpec::rho)
      .def("zero_mean", &NoiseSpec::zero_mean);

  m.def("sample_scenario",
        py::overload_cast<const NoiseSpec&, int, Rng&>(&sample_scenario),
        py::arg("noise"), py::arg("horizon"), py::arg("rng"));
  m.def("sample_scenario",
        py::overload_cast<const NoiseSpec&, int, std::uint64_t>(&sample_scenario),
        py::arg("noise"), py::arg("horizon"), py::arg("seed"));

  py::enum_<Coupling>(m, "Coupling")
      .value("AdditiveNoise", Coupling::AdditiveNoise)
      .value("Dilation", Coupling::Dilation);
  py::enum_<ClaimedOrder>(m, "ClaimedOrder")
      .value("Cx", ClaimedOrder::Cx)
      .value("Icx", ClaimedOrder::Icx);

  py::class_<ScenarioPair>(m, "ScenarioPair")
      .def_readonly("low", &ScenarioPair::low)
      .def_readonly("high", &ScenarioPair::high)
      .def_readonly("coupling", &ScenarioPair::coupling)
      .def_readonly("dilation_factor", &ScenarioPair::dilation_factor)
      .def_readonly("claimed_order", &ScenarioPair::claimed_order);
  m.def("couple_additive", &couple_additive, py::arg("base"), py::arg("noise"),
        py::arg("rng"));
  m.def("couple_dilation", &couple_dilation, py::arg("noise"), py::arg("horizon"),
        py::arg("c"), py::arg("rng"));
  m.def("marginal_distribution", &marginal_distribution, py::arg("replicates"),
        py::arg("t"), py::arg("k"));

  py::class_<Box>(m, "Box")
      .def(py::init<Eigen::VectorXd, Eigen::VectorXd>(), py::arg("lo"), py::arg("hi"))
      .def_readonly("lo", &Box::lo)
      .def_readonly("hi", &Box::hi)
      .def("dim", &Box::dim);

  py::class_<ConvexityWitness>(m, "ConvexityWitness")
      .def_readonly("x", &ConvexityWitness::x)
      .def_readonly("y", &ConvexityWitness::y)
      .def_readonly("lambda_", &ConvexityWitness::lambda)
      .def_readonly("lhs", &ConvexityWitness::lhs)
      .def_readonly("rhs", &ConvexityWitness::rhs)
      .def_readonly("functional", &ConvexityWitness::functional);

  py::class_<ProbeResult>(m, "ProbeResult")
      .def_readonly("pass_", &ProbeResult::pass)
      .def_readonly("witness", &ProbeResult::witness)
      .def_readonly("trials_run", &ProbeResult::trials_run);

  m.attr("PROBE_TOL") = kProbeTol;
  m.def("logconvexity_probe", &logconvexity_probe, py::arg("entry"), py::arg("box"),
        py::arg("trials"), py::arg("seed"), py::arg("tol") = kProbeTol);
  m.def("scenario_convexity_probe", &scenario_convexity_probe, py::arg("spec"),
        py::arg("n0"), py::arg("functional"), py::arg("horizon"), py::arg("step_box"),
        py::arg("trials"), py::arg("seed"), py::arg("tol") = kProbeTol);

  py::class_<TrajectoryStats>(m, "TrajectoryStats")
      .def_readonly("horizon", &TrajectoryStats::horizon)
      .def_readonly("replicates", &TrajectoryStats::replicates)
      .def_readonly("mean_N", &TrajectoryStats::mean_N)
      .def_readonly("var_N", &TrajectoryStats::var_N)
      .def_readonly("ci_N", &TrajectoryStats::ci_N)
      .def_readonly("mean_logN", &TrajectoryStats::mean_logN)
      .def_readonly("var_logN", &TrajectoryStats::var_logN)
      .def_readonly("ci_logN", &TrajectoryStats::ci_logN);

  m.def(
      "run_ensemble",
      [](const MatrixSpec& spec, const PopulationVector& n0, const SizeFunctional& f,
         const NoiseSpec& noise, int horizon, long replicates, std::uint64_t seed,
         int threads, long chunk) {
        EnsembleOptions options;
        options.threads = threads;
        options.chunk = chunk;
        return run_ensemble(spec, n0, f, noise, horizon, replicates, seed, options);
      },
      py::arg("spec"), py::arg("n0"), py::arg("functional"), py::arg("noise"),
      py::arg("horizon"), py::arg("replicates"), py::arg("seed"),
      py::arg("threads") = 1, py::arg("chunk") = 1024,
      py::call_guard<py::gil_scoped_release>());

  py::class_<CouplingSpec>(m, "CouplingSpec")
      .def_static("dilation", &CouplingSpec::dilation, py::arg("c"))
      .def_static("additive", &CouplingSpec::additive, py::arg("noise"))
      .def_readonly("kind", &CouplingSpec::kind)
      .def_readonly("dilation_factor", &CouplingSpec::dilation_factor)
      .def_readonly("additive_noise", &CouplingSpec::additive_noise);

  py::class_<PropositionReport>(m, "PropositionReport")
      .def_readonly("horizon", &PropositionReport::horizon)
      .def_readonly("replicates", &PropositionReport::replicates)
      .def_readonly("seed", &PropositionReport::seed)
      .def_readonly("coupling", &PropositionReport::coupling)
      .def_readonly("dilation_factor", &PropositionReport::dilation_factor)
      .def_readonly("low", &PropositionReport::low)
      .def_readonly("high", &PropositionReport::high)
      .def_readonly("diff_mean_N", &PropositionReport::diff_mean_N)
      .def_readonly("diff_ci_N", &PropositionReport::diff_ci_N)
      .def_readonly("diff_mean_logN", &PropositionReport::diff_mean_logN)
      .def_readonly("diff_ci_logN", &PropositionReport::diff_ci_logN)
      .def_readonly("means_ordered_N", &PropositionReport::means_ordered_N)
      .def_readonly("means_ordered_logN", &PropositionReport::means_ordered_logN)
      .def_readonly("all_means_ordered_N", &PropositionReport::all_means_ordered_N)
      .def_readonly("all_means_ordered_logN",
                    &PropositionReport::all_means_ordered_logN)
      .def_readonly("sl_thresholds", &PropositionReport::sl_thresholds)
      .def_readonly("sl_diff_mean", &PropositionReport::sl_diff_mean)
      .def_readonly("sl_diff_ci", &PropositionReport::sl_diff_ci)
      .def_readonly("sl_holds", &PropositionReport::sl_holds)
      .def_readonly("stop_loss_dominance", &PropositionReport::stop_loss_dominance)
      .def_readonly("final_logN_low", &PropositionReport::final_logN_low)
      .def_readonly("final_logN_high", &PropositionReport::final_logN_high);

  m.def(
      "verify_proposition",
      [](const MatrixSpec& spec, const PopulationVector& n0, const SizeFunctional& f,
         const NoiseSpec& noise, const CouplingSpec& coupling, int horizon,
         long replicates, std::uint64_t seed, bool allow_linear, int threads,
         long chunk, int stop_loss_thresholds) {
        EnsembleOptions options;
        options.threads = threads;
        options.chunk = chunk;
        return verify_proposition(spec, n0, f, noise, coupling, horizon, replicates,
                                  seed, allow_linear, options, stop_loss_thresholds);
      },
      py::arg("spec"), py::arg("n0"), py::arg("functional"), py::arg("noise"),
      py::arg("coupling"), py::arg("horizon"), py::arg("replicates"), py::arg("seed"),
      py::arg("allow_linear") = false, py::arg("threads") = 1,
      py::arg("chunk") = 1024, py::arg("stop_loss_thresholds") = 50,
      py::call_guard<py::gil_scoped_release>());

  py::class_<GrowthRateEstimate>(m, "GrowthRateEstimate")
      .def_readonly("log_lambda_s", &GrowthRateEstimate::log_lambda_s)
      .def_readonly("se", &GrowthRateEstimate::se)
      .def_readonly("horizon", &GrowthRateEstimate::horizon)
      .def_readonly("batches", &GrowthRateEstimate::batches)
      .def_readonly("primitive_mean_matrix",
                    &GrowthRateEstimate::primitive_mean_matrix);
  m.def("estimate_stochastic_growth_rate", &estimate_stochastic_growth_rate,
        py::arg("spec"), py::arg("n0"), py::arg("noise"), py::arg("horizon"),
        py::arg("seed"), py::arg("batches") = 20,
        py::call_guard<py::gil_scoped_release>());

  py::class_<LandeParams>(m, "LandeParams")
      .def(py::init([](double lambda_bar, double r_bar, double eps_bar,
                       double sigma_r_sq, double sigma_eps_sq) {
             return LandeParams{lambda_bar, r_bar, eps_bar, sigma_r_sq, sigma_eps_sq};
           }),
           py::arg("lambda_bar") = 1.0, py::arg("r_bar") = 0.0,
           py::arg("eps_bar") = 0.0, py::arg("sigma_r_sq") = 0.0,
           py::arg("sigma_eps_sq") = 0.0)
      .def_readwrite("lambda_bar", &LandeParams::lambda_bar)
      .def_readwrite("r_bar", &LandeParams::r_bar)
      .def_readwrite("eps_bar", &LandeParams::eps_bar)
      .def_readwrite("sigma_r_sq", &LandeParams::sigma_r_sq)
      .def_readwrite("sigma_eps_sq", &LandeParams::sigma_eps_sq);
  m.def("lande_log_scale_mean", &lande_log_scale_mean, py::arg("params"));
  m.def("lande_arithmetic_mean", &lande_arithmetic_mean, py::arg("params"));
  m.def("mean_log_quadrature", &mean_log_quadrature, py::arg("lambda_bar"),
        py::arg("sigma_sq"));

  py::class_<TuljapurkarApprox>(m, "TuljapurkarApprox")
      .def_readonly("lambda1", &TuljapurkarApprox::lambda1)
      .def_readonly("tau_sq", &TuljapurkarApprox::tau_sq)
      .def_readonly("theta", &TuljapurkarApprox::theta)
      .def_readonly("log_lambda_s", &TuljapurkarApprox::log_lambda_s);
  m.def("tuljapurkar_approx", &tuljapurkar_approx, py::arg("spec"), py::arg("noise"));

  py::class_<DominantEigen>(m, "DominantEigen")
      .def_readonly("lambda1", &DominantEigen::lambda1)
      .def_readonly("right", &DominantEigen::right)
      .def_readonly("left", &DominantEigen::left);
  m.def("dominant_eigen_power", &dominant_eigen_power, py::arg("matrix"),
        py::arg("tol") = 1e-12, py::arg("max_iterations") = 500000);
}
