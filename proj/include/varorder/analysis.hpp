#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "varorder/matrix_model.hpp"
#include "varorder/scenario.hpp"

namespace varorder {

// Per-time ensemble statistics of the size functional on both scales.
// ci_* are half-widths of central 95% normal intervals for the mean.
struct TrajectoryStats {
  int horizon = 0;
  long replicates = 0;
  std::vector<double> mean_N, var_N, ci_N;
  std::vector<double> mean_logN, var_logN, ci_logN;
};

// Replicates are reduced in fixed chunks: each chunk accumulates its
// replicates in index order and chunk partials are combined in chunk
// order, so results are bit-identical for every thread count.
struct EnsembleOptions {
  int threads = 1;
  long chunk = 1024;
};

TrajectoryStats run_ensemble(const MatrixSpec& spec, const PopulationVector& n0,
                             const SizeFunctional& f, const NoiseSpec& noise,
                             int horizon, long replicates, std::uint64_t seed,
                             const EnsembleOptions& options = {});

struct CouplingSpec {
  Coupling kind = Coupling::Dilation;
  double dilation_factor = 1.5;
  std::optional<NoiseSpec> additive_noise;

  static CouplingSpec dilation(double c);
  static CouplingSpec additive(NoiseSpec noise);
};

// Paired comparison of a scenario against its more-variable coupling.
// Differences are high minus low, per replicate, so their intervals are
// paired. means_ordered_* is diff >= -ci at each time. The stop-loss rows
// compare E(N(T)-c)+ at log-spaced thresholds between the pooled 0.1% and
// 99.9% quantiles of the final sizes.
struct PropositionReport {
  int horizon = 0;
  long replicates = 0;
  std::uint64_t seed = 0;
  Coupling coupling = Coupling::Dilation;
  double dilation_factor = 1.0;

  TrajectoryStats low, high;
  std::vector<double> diff_mean_N, diff_ci_N;
  std::vector<double> diff_mean_logN, diff_ci_logN;
  std::vector<bool> means_ordered_N, means_ordered_logN;
  bool all_means_ordered_N = false;
  bool all_means_ordered_logN = false;

  std::vector<double> sl_thresholds, sl_diff_mean, sl_diff_ci;
  std::vector<bool> sl_holds;
  bool stop_loss_dominance = false;

  // Final-time log sizes in replicate order.
  std::vector<double> final_logN_low, final_logN_high;
};

PropositionReport verify_proposition(const MatrixSpec& spec,
                                     const PopulationVector& n0,
                                     const SizeFunctional& f,
                                     const NoiseSpec& noise,
                                     const CouplingSpec& coupling, int horizon,
                                     long replicates, std::uint64_t seed,
                                     bool allow_linear = false,
                                     const EnsembleOptions& options = {},
                                     int stop_loss_thresholds = 50);

// Single long trajectory; the estimate is the time-average log growth of
// the 1-norm and the standard error comes from batch means.
struct GrowthRateEstimate {
  double log_lambda_s = 0.0;
  double se = 0.0;
  long horizon = 0;
  int batches = 0;
  bool primitive_mean_matrix = true;
};

GrowthRateEstimate estimate_stochastic_growth_rate(const MatrixSpec& spec,
                                                   const PopulationVector& n0,
                                                   const NoiseSpec& noise,
                                                   long horizon,
                                                   std::uint64_t seed,
                                                   int batches = 20);

struct LandeParams {
  double lambda_bar = 1.0;
  double r_bar = 0.0;
  double eps_bar = 0.0;
  double sigma_r_sq = 0.0;
  double sigma_eps_sq = 0.0;
};

// Mean growth rate on the log scale: log(lambda_bar) - sigma_r_sq.
double lande_log_scale_mean(const LandeParams& p);
// Mean multiplicative rate under log-scale noise:
// exp(r_bar + eps_bar + sigma_eps_sq / 2).
double lande_arithmetic_mean(const LandeParams& p);

// E log(lambda_bar + eps) for eps ~ N(0, sigma_sq), by quadrature.
// Cross-checks the log-scale approximation in tests.
double mean_log_quadrature(double lambda_bar, double sigma_sq);

// Small-noise expansion of the stochastic growth rate around the mean
// matrix; valid for models whose entries are linear in the environment.
struct TuljapurkarApprox {
  double lambda1 = 0.0;
  double tau_sq = 0.0;
  double theta = 0.0;  // serial-correlation term; zero for iid noise
  double log_lambda_s = 0.0;
};

TuljapurkarApprox tuljapurkar_approx(const MatrixSpec& spec, const NoiseSpec& noise);

struct DominantEigen {
  double lambda1 = 0.0;
  Eigen::VectorXd right;
  Eigen::VectorXd left;
};

// Power iteration on m and its transpose to tolerance `tol` in the
// iterates; throws NonPrimitiveMeanMatrix when it fails to settle.
DominantEigen dominant_eigen_power(const Eigen::MatrixXd& m, double tol = 1e-12,
                                   long max_iterations = 500000);

}  // namespace varorder
