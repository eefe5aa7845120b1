#include "varorder/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "varorder/errors.hpp"
#include "varorder/numeric.hpp"
#include "varorder/rng.hpp"

namespace varorder {

namespace {

constexpr double kZ95 = 1.959963984540054;

long num_chunks(long total, long chunk) { return (total + chunk - 1) / chunk; }

// Threads pull chunk indices from a shared counter; the work done for a
// chunk depends only on its index, never on which thread ran it.
template <typename Fn>
void run_chunked(long total, long chunk, int threads, const Fn& fn) {
  const long chunks = num_chunks(total, chunk);
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (;;) {
      const long c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        fn(c, c * chunk, std::min(total, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int n = static_cast<int>(std::min<long>(std::max(threads, 1), chunks));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

// Running sums for one time series across a chunk of replicates.
struct MomentSums {
  std::vector<double> s1, s2;

  explicit MomentSums(int len) : s1(len, 0.0), s2(len, 0.0) {}
  void add(int t, double v) {
    s1[t] += v;
    s2[t] += v * v;
  }
  void merge(const MomentSums& o) {
    for (std::size_t i = 0; i < s1.size(); ++i) {
      s1[i] += o.s1[i];
      s2[i] += o.s2[i];
    }
  }
};

struct MomentView {
  std::vector<double> mean, var, ci;
};

MomentView finalize(const MomentSums& sums, long n) {
  const int len = static_cast<int>(sums.s1.size());
  MomentView v;
  v.mean.resize(len);
  v.var.resize(len);
  v.ci.resize(len);
  for (int t = 0; t < len; ++t) {
    const double m = sums.s1[t] / static_cast<double>(n);
    double var = 0.0;
    if (n > 1) {
      var = (sums.s2[t] - sums.s1[t] * m) / static_cast<double>(n - 1);
      var = std::max(var, 0.0);
    }
    v.mean[t] = m;
    v.var[t] = var;
    v.ci[t] = kZ95 * std::sqrt(var / static_cast<double>(n));
  }
  return v;
}

void check_ensemble_args(const MatrixSpec& spec, const NoiseSpec& noise,
                         int horizon, long replicates) {
  if (noise.factor_dim() != spec.factor_dim)
    throw ValidationError("DimensionMismatch", "noise dimension does not match model");
  if (horizon < 1) throw ValidationError("InvalidSpec", "horizon must be >= 1");
  if (replicates < 1) throw ValidationError("InvalidSpec", "need at least one replicate");
}

}  // namespace

TrajectoryStats run_ensemble(const MatrixSpec& spec, const PopulationVector& n0,
                             const SizeFunctional& f, const NoiseSpec& noise,
                             int horizon, long replicates, std::uint64_t seed,
                             const EnsembleOptions& options) {
  check_ensemble_args(spec, noise, horizon, replicates);
  if (options.chunk < 1) throw ValidationError("InvalidSpec", "chunk must be >= 1");

  const int len = horizon + 1;
  const long chunks = num_chunks(replicates, options.chunk);
  std::vector<MomentSums> part_n(chunks, MomentSums(len));
  std::vector<MomentSums> part_log(chunks, MomentSums(len));

  run_chunked(replicates, options.chunk, options.threads,
              [&](long c, long begin, long end) {
                for (long i = begin; i < end; ++i) {
                  Rng rng(replicate_seed(seed, static_cast<std::uint64_t>(i)));
                  const Scenario sc = sample_scenario(noise, horizon, rng);
                  const LogTrajectory tr = propagate_log(spec, n0, sc, f);
                  for (int t = 0; t < len; ++t) {
                    const double l = tr.log_size[static_cast<std::size_t>(t)];
                    part_log[c].add(t, l);
                    part_n[c].add(t, std::exp(l));
                  }
                }
              });

  MomentSums total_n(len), total_log(len);
  for (long c = 0; c < chunks; ++c) {
    total_n.merge(part_n[c]);
    total_log.merge(part_log[c]);
  }

  TrajectoryStats out;
  out.horizon = horizon;
  out.replicates = replicates;
  MomentView nv = finalize(total_n, replicates);
  MomentView lv = finalize(total_log, replicates);
  out.mean_N = std::move(nv.mean);
  out.var_N = std::move(nv.var);
  out.ci_N = std::move(nv.ci);
  out.mean_logN = std::move(lv.mean);
  out.var_logN = std::move(lv.var);
  out.ci_logN = std::move(lv.ci);
  return out;
}

CouplingSpec CouplingSpec::dilation(double c) {
  if (!(c >= 1.0)) throw ValidationError("InvalidSpec", "dilation factor must be >= 1");
  CouplingSpec s;
  s.kind = Coupling::Dilation;
  s.dilation_factor = c;
  return s;
}

CouplingSpec CouplingSpec::additive(NoiseSpec noise) {
  CouplingSpec s;
  s.kind = Coupling::AdditiveNoise;
  s.additive_noise = std::move(noise);
  return s;
}

PropositionReport verify_proposition(const MatrixSpec& spec,
                                     const PopulationVector& n0,
                                     const SizeFunctional& f,
                                     const NoiseSpec& noise,
                                     const CouplingSpec& coupling, int horizon,
                                     long replicates, std::uint64_t seed,
                                     bool allow_linear,
                                     const EnsembleOptions& options,
                                     int stop_loss_thresholds) {
  check_ensemble_args(spec, noise, horizon, replicates);
  if (options.chunk < 1) throw ValidationError("InvalidSpec", "chunk must be >= 1");
  if (stop_loss_thresholds < 1)
    throw ValidationError("InvalidSpec", "need at least one stop-loss threshold");
  if (spec.has_affine_entries() && !allow_linear)
    throw ValidationError("HypothesisViolated",
                          "affine entries break the log-convexity hypothesis; "
                          "enable allow_linear to run regardless");
  if (coupling.kind == Coupling::AdditiveNoise) {
    if (!coupling.additive_noise)
      throw ValidationError("InvalidSpec", "additive coupling needs a noise spec");
    if (!coupling.additive_noise->zero_mean())
      throw ValidationError("NonZeroMeanNoise", "additive coupling needs zero-mean noise");
    if (coupling.additive_noise->factor_dim() != spec.factor_dim)
      throw ValidationError("DimensionMismatch",
                            "additive noise dimension does not match model");
  }

  const int len = horizon + 1;
  const long chunks = num_chunks(replicates, options.chunk);
  std::vector<MomentSums> part_n_lo(chunks, MomentSums(len)),
      part_log_lo(chunks, MomentSums(len)), part_n_hi(chunks, MomentSums(len)),
      part_log_hi(chunks, MomentSums(len)), part_dn(chunks, MomentSums(len)),
      part_dlog(chunks, MomentSums(len));

  PropositionReport rep;
  rep.final_logN_low.resize(static_cast<std::size_t>(replicates));
  rep.final_logN_high.resize(static_cast<std::size_t>(replicates));

  run_chunked(replicates, options.chunk, options.threads,
              [&](long c, long begin, long end) {
                for (long i = begin; i < end; ++i) {
                  Rng rng(replicate_seed(seed, static_cast<std::uint64_t>(i)));
                  ScenarioPair pair =
                      coupling.kind == Coupling::Dilation
                          ? couple_dilation(noise, horizon, coupling.dilation_factor, rng)
                          : couple_additive(sample_scenario(noise, horizon, rng),
                                            *coupling.additive_noise, rng);
                  const LogTrajectory lo = propagate_log(spec, n0, pair.low, f);
                  const LogTrajectory hi = propagate_log(spec, n0, pair.high, f);
                  for (int t = 0; t < len; ++t) {
                    const double llo = lo.log_size[static_cast<std::size_t>(t)];
                    const double lhi = hi.log_size[static_cast<std::size_t>(t)];
                    const double nlo = std::exp(llo), nhi = std::exp(lhi);
                    part_log_lo[c].add(t, llo);
                    part_log_hi[c].add(t, lhi);
                    part_n_lo[c].add(t, nlo);
                    part_n_hi[c].add(t, nhi);
                    part_dn[c].add(t, nhi - nlo);
                    part_dlog[c].add(t, lhi - llo);
                  }
                  rep.final_logN_low[static_cast<std::size_t>(i)] = lo.log_size.back();
                  rep.final_logN_high[static_cast<std::size_t>(i)] = hi.log_size.back();
                }
              });

  MomentSums total_n_lo(len), total_log_lo(len), total_n_hi(len), total_log_hi(len),
      total_dn(len), total_dlog(len);
  for (long c = 0; c < chunks; ++c) {
    total_n_lo.merge(part_n_lo[c]);
    total_log_lo.merge(part_log_lo[c]);
    total_n_hi.merge(part_n_hi[c]);
    total_log_hi.merge(part_log_hi[c]);
    total_dn.merge(part_dn[c]);
    total_dlog.merge(part_dlog[c]);
  }

  rep.horizon = horizon;
  rep.replicates = replicates;
  rep.seed = seed;
  rep.coupling = coupling.kind;
  rep.dilation_factor =
      coupling.kind == Coupling::Dilation ? coupling.dilation_factor : 1.0;

  const auto fill = [&](TrajectoryStats& s, const MomentSums& n, const MomentSums& l) {
    s.horizon = horizon;
    s.replicates = replicates;
    MomentView nv = finalize(n, replicates);
    MomentView lv = finalize(l, replicates);
    s.mean_N = std::move(nv.mean);
    s.var_N = std::move(nv.var);
    s.ci_N = std::move(nv.ci);
    s.mean_logN = std::move(lv.mean);
    s.var_logN = std::move(lv.var);
    s.ci_logN = std::move(lv.ci);
  };
  fill(rep.low, total_n_lo, total_log_lo);
  fill(rep.high, total_n_hi, total_log_hi);

  const MomentView dn = finalize(total_dn, replicates);
  const MomentView dl = finalize(total_dlog, replicates);
  rep.diff_mean_N = dn.mean;
  rep.diff_ci_N = dn.ci;
  rep.diff_mean_logN = dl.mean;
  rep.diff_ci_logN = dl.ci;
  rep.means_ordered_N.resize(len);
  rep.means_ordered_logN.resize(len);
  rep.all_means_ordered_N = true;
  rep.all_means_ordered_logN = true;
  for (int t = 0; t < len; ++t) {
    rep.means_ordered_N[t] = dn.mean[t] >= -dn.ci[t];
    rep.means_ordered_logN[t] = dl.mean[t] >= -dl.ci[t];
    rep.all_means_ordered_N = rep.all_means_ordered_N && rep.means_ordered_N[t];
    rep.all_means_ordered_logN = rep.all_means_ordered_logN && rep.means_ordered_logN[t];
  }

  // Stop-loss comparison of the final sizes at log-spaced thresholds
  // between the pooled 0.1% and 99.9% quantiles.
  std::vector<double> pooled;
  pooled.reserve(2 * static_cast<std::size_t>(replicates));
  pooled.insert(pooled.end(), rep.final_logN_low.begin(), rep.final_logN_low.end());
  pooled.insert(pooled.end(), rep.final_logN_high.begin(), rep.final_logN_high.end());
  std::sort(pooled.begin(), pooled.end());
  const auto quantile = [&](double q) {
    const double pos = q * (static_cast<double>(pooled.size()) - 1.0);
    return pooled[static_cast<std::size_t>(pos)];
  };
  const double log_lo = quantile(0.001), log_hi = quantile(0.999);

  const int k = stop_loss_thresholds;
  rep.sl_thresholds.resize(k);
  rep.sl_diff_mean.resize(k);
  rep.sl_diff_ci.resize(k);
  rep.sl_holds.resize(k);
  rep.stop_loss_dominance = true;
  std::vector<double> d(static_cast<std::size_t>(replicates));
  std::vector<double> d2(static_cast<std::size_t>(replicates));
  for (int j = 0; j < k; ++j) {
    const double frac = k == 1 ? 0.5 : static_cast<double>(j) / (k - 1);
    const double c = std::exp(log_lo + (log_hi - log_lo) * frac);
    rep.sl_thresholds[j] = c;
    for (long i = 0; i < replicates; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const double lo = std::max(std::exp(rep.final_logN_low[idx]) - c, 0.0);
      const double hi = std::max(std::exp(rep.final_logN_high[idx]) - c, 0.0);
      d[idx] = hi - lo;
      d2[idx] = d[idx] * d[idx];
    }
    const double n = static_cast<double>(replicates);
    const double m = pairwise_sum(d) / n;
    double var = 0.0;
    if (replicates > 1) var = std::max(0.0, (pairwise_sum(d2) - n * m * m) / (n - 1));
    const double ci = kZ95 * std::sqrt(var / n);
    rep.sl_diff_mean[j] = m;
    rep.sl_diff_ci[j] = ci;
    rep.sl_holds[j] = m >= -ci;
    rep.stop_loss_dominance = rep.stop_loss_dominance && rep.sl_holds[j];
  }
  return rep;
}

GrowthRateEstimate estimate_stochastic_growth_rate(const MatrixSpec& spec,
                                                   const PopulationVector& n0,
                                                   const NoiseSpec& noise,
                                                   long horizon,
                                                   std::uint64_t seed,
                                                   int batches) {
  if (noise.factor_dim() != spec.factor_dim)
    throw ValidationError("DimensionMismatch", "noise dimension does not match model");
  if (n0.dim() != spec.dim)
    throw ValidationError("DimensionMismatch", "population dimension does not match model");
  if (batches < 2) throw ValidationError("InvalidSpec", "need at least two batches");
  if (horizon < batches)
    throw ValidationError("InvalidSpec", "horizon must be at least the batch count");

  GrowthRateEstimate est;
  est.horizon = horizon;
  est.batches = batches;
  est.primitive_mean_matrix = is_primitive(evaluate_matrix(spec, noise.mean()));

  Rng rng(seed);
  ScenarioSampler sampler(noise, rng);
  Eigen::VectorXd u = n0.abundances / n0.abundances.sum();
  double acc = 0.0;
  std::vector<double> boundary_acc(static_cast<std::size_t>(batches) + 1, 0.0);
  int next_boundary = 1;
  const auto boundary_of = [&](int b) { return b * horizon / batches; };
  for (long t = 0; t < horizon; ++t) {
    const Eigen::MatrixXd a = evaluate_matrix(spec, sampler.next());
    Eigen::VectorXd m = a * u;
    const double s = m.sum();
    if (!std::isfinite(s))
      throw SimulationError("Overflow", "growth diverged at step " + std::to_string(t + 1));
    if (s <= 0.0)
      throw SimulationError("ExtinctTrajectory",
                            "population hit zero at step " + std::to_string(t + 1));
    u = m / s;
    acc += std::log(s);
    while (next_boundary <= batches && boundary_of(next_boundary) == t + 1) {
      boundary_acc[static_cast<std::size_t>(next_boundary)] = acc;
      ++next_boundary;
    }
  }

  est.log_lambda_s = acc / static_cast<double>(horizon);

  std::vector<double> rates(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b) {
    const long lo = boundary_of(b), hi = boundary_of(b + 1);
    rates[static_cast<std::size_t>(b)] =
        (boundary_acc[static_cast<std::size_t>(b + 1)] -
         boundary_acc[static_cast<std::size_t>(b)]) /
        static_cast<double>(hi - lo);
  }
  const double mean_rate = pairwise_sum(rates) / batches;
  double ss = 0.0;
  for (double r : rates) ss += (r - mean_rate) * (r - mean_rate);
  est.se = std::sqrt(ss / (batches - 1)) / std::sqrt(static_cast<double>(batches));
  return est;
}

namespace {

void check_lande(const LandeParams& p) {
  if (!(p.lambda_bar > 0.0) || !std::isfinite(p.lambda_bar))
    throw ValidationError("InvalidSpec", "lambda_bar must be positive");
  if (p.sigma_r_sq < 0.0 || p.sigma_eps_sq < 0.0 || !std::isfinite(p.sigma_r_sq) ||
      !std::isfinite(p.sigma_eps_sq))
    throw ValidationError("InvalidSpec", "variances must be finite and >= 0");
  if (!std::isfinite(p.r_bar) || !std::isfinite(p.eps_bar))
    throw ValidationError("InvalidSpec", "means must be finite");
}

}  // namespace

double lande_log_scale_mean(const LandeParams& p) {
  check_lande(p);
  return std::log(p.lambda_bar) - p.sigma_r_sq;
}

double lande_arithmetic_mean(const LandeParams& p) {
  check_lande(p);
  return std::exp(p.r_bar + p.eps_bar + 0.5 * p.sigma_eps_sq);
}

double mean_log_quadrature(double lambda_bar, double sigma_sq) {
  if (!(lambda_bar > 0.0) || sigma_sq < 0.0)
    throw ValidationError("InvalidSpec", "need lambda_bar > 0 and sigma_sq >= 0");
  if (sigma_sq == 0.0) return std::log(lambda_bar);
  const double sigma = std::sqrt(sigma_sq);
  if (lambda_bar - 8.0 * sigma <= 0.0)
    throw ValidationError("InvalidSpec",
                          "quadrature domain touches log of a nonpositive value");
  const int n = 4096;  // Simpson panels over z in [-8, 8]
  const double h = 16.0 / n;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  const auto g = [&](double z) {
    return std::log(lambda_bar + sigma * z) * kInvSqrt2Pi * std::exp(-0.5 * z * z);
  };
  double s = g(-8.0) + g(8.0);
  for (int i = 1; i < n; ++i) s += g(-8.0 + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

DominantEigen dominant_eigen_power(const Eigen::MatrixXd& m, double tol,
                                   long max_iterations) {
  const int n = static_cast<int>(m.rows());
  if (n != m.cols() || n < 1)
    throw ValidationError("InvalidSpec", "power iteration needs a square matrix");

  const auto iterate = [&](const Eigen::MatrixXd& a) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (long it = 0; it < max_iterations; ++it) {
      Eigen::VectorXd w = a * v;
      const double s = w.cwiseAbs().sum();
      if (!(s > 0.0) || !std::isfinite(s))
        throw SimulationError("NonPrimitiveMeanMatrix",
                              "power iteration collapsed to zero");
      w /= s;
      if ((w - v).cwiseAbs().maxCoeff() <= tol) return w;
      v = std::move(w);
    }
    throw SimulationError("NonPrimitiveMeanMatrix", "power iteration did not converge");
  };

  DominantEigen e;
  e.right = iterate(m);
  e.left = iterate(m.transpose());
  const double vw = e.left.dot(e.right);
  if (!(std::abs(vw) > 0.0))
    throw SimulationError("NonPrimitiveMeanMatrix", "degenerate eigenvector pairing");
  e.lambda1 = e.left.dot(m * e.right) / vw;
  return e;
}

TuljapurkarApprox tuljapurkar_approx(const MatrixSpec& spec, const NoiseSpec& noise) {
  if (noise.factor_dim() != spec.factor_dim)
    throw ValidationError("DimensionMismatch", "noise dimension does not match model");
  if (!spec.all_linear())
    throw ValidationError("UnsupportedEntryKind",
                          "approximation needs entries linear in the environment");

  const Eigen::MatrixXd mean_matrix = evaluate_matrix(spec, noise.mean());
  if (!is_primitive(mean_matrix))
    throw SimulationError("NonPrimitiveMeanMatrix", "mean matrix is not primitive");
  const DominantEigen eig = dominant_eigen_power(mean_matrix);
  if (!(eig.lambda1 > 0.0))
    throw SimulationError("NonPrimitiveMeanMatrix", "dominant eigenvalue is not positive");

  // Sensitivities s_ij = v_i w_j / (v.w); with entries linear in eps the
  // matrix perturbation is sum_ij (c_ij . eps) E_ij, so the variance of
  // the projected perturbation is g' Cov g with g = sum_ij s_ij c_ij.
  const double vw = eig.left.dot(eig.right);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.factor_dim);
  for (int i = 0; i < spec.dim; ++i)
    for (int j = 0; j < spec.dim; ++j) {
      const double s_ij = eig.left[i] * eig.right[j] / vw;
      g += s_ij * spec.entry(i, j).affine_coefficients(spec.factor_dim);
    }

  TuljapurkarApprox out;
  out.lambda1 = eig.lambda1;
  out.tau_sq = g.dot(noise.covariance() * g);
  out.theta = 0.0;
  out.log_lambda_s = std::log(out.lambda1) -
                     out.tau_sq / (2.0 * out.lambda1 * out.lambda1) +
                     out.theta / (out.lambda1 * out.lambda1);
  return out;
}

}  // namespace varorder
