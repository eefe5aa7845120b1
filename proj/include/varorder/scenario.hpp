#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "varorder/distribution.hpp"
#include "varorder/rng.hpp"

namespace varorder {

// One realized environment path: row t is eps(t), for t = 0..T-1.
struct Scenario {
  Eigen::MatrixXd factors;

  int horizon() const { return static_cast<int>(factors.rows()); }
  int factor_dim() const { return static_cast<int>(factors.cols()); }
};

// Law of the per-step environment vector.
class NoiseSpec {
public:
  enum class Kind { IidNormal, IidDiscrete, Ar1Normal };

  static NoiseSpec iid_normal(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
  // Independent components, one scalar law per factor.
  static NoiseSpec iid_discrete(std::vector<DiscreteDistribution> components);
  // Stationary AR(1): eps(t+1) = mean + rho (eps(t) - mean) + sqrt(1-rho^2) W,
  // W centered normal with the stationary covariance; eps(0) drawn from the
  // stationary law.
  static NoiseSpec ar1_normal(Eigen::VectorXd mean, Eigen::MatrixXd stationary_cov,
                              double rho);

  Kind kind() const { return kind_; }
  int factor_dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  // Per-step (for AR(1): stationary) covariance.
  const Eigen::MatrixXd& covariance() const { return cov_; }
  double rho() const { return rho_; }
  const std::vector<DiscreteDistribution>& components() const { return components_; }

  bool zero_mean() const;

private:
  NoiseSpec() = default;

  Kind kind_ = Kind::IidNormal;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;  // cov = factor factor'
  double rho_ = 0.0;
  std::vector<DiscreteDistribution> components_;

  friend class ScenarioSampler;
};

// Streams eps(0), eps(1), ... from one Rng; keeps the AR(1) state.
class ScenarioSampler {
public:
  ScenarioSampler(const NoiseSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {}
  Eigen::VectorXd next();

private:
  const NoiseSpec& spec_;
  Rng& rng_;
  bool started_ = false;
  Eigen::VectorXd state_;
};

Scenario sample_scenario(const NoiseSpec& spec, int horizon, Rng& rng);
Scenario sample_scenario(const NoiseSpec& spec, int horizon, std::uint64_t seed);

enum class Coupling { AdditiveNoise, Dilation };
enum class ClaimedOrder { Cx, Icx };

const char* to_string(Coupling c);
const char* to_string(ClaimedOrder o);

// Two environment paths on one probability space, the second at least as
// variable as the first in the stacked convex order.
struct ScenarioPair {
  Scenario low;
  Scenario high;
  Coupling coupling = Coupling::Dilation;
  double dilation_factor = 1.0;
  ClaimedOrder claimed_order = ClaimedOrder::Cx;
};

// high = base + Z with Z an independent zero-mean path (noise must have
// exactly zero mean, otherwise NonZeroMeanNoise).
ScenarioPair couple_additive(const Scenario& base, const NoiseSpec& noise, Rng& rng);

// Common draw E; low = E, high = M + c (E - M) around the noise mean M,
// c >= 1. Both paths share every random number.
ScenarioPair couple_dilation(const NoiseSpec& spec, int horizon, double c, Rng& rng);

// Equal-weight sample of factor k at time t across replicate scenarios.
EmpiricalSample marginal_distribution(const std::vector<Scenario>& replicates,
                                      int t, int k);

}  // namespace varorder
