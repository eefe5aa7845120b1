#include "varorder/scenario.hpp"

#include <cmath>

#include "varorder/errors.hpp"

namespace varorder {

namespace {

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ValidationError("InvalidSpec", "noise covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
  Eigen::VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() < -1e-10 * scale)
    throw ValidationError("InvalidSpec", "noise covariance is not positive semidefinite");
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    lam[i] = std::sqrt(std::max(lam[i], 0.0));
  return es.eigenvectors() * lam.asDiagonal();
}

void check_mean_cov(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  if (!mean.allFinite() || !cov.allFinite())
    throw ValidationError("InvalidSpec", "non-finite noise parameters");
  if (mean.size() < 1)
    throw ValidationError("InvalidSpec", "noise needs at least one factor");
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw ValidationError("DimensionMismatch", "noise mean and covariance sizes disagree");
}

}  // namespace

NoiseSpec NoiseSpec::iid_normal(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  check_mean_cov(mean, covariance);
  NoiseSpec s;
  s.kind_ = Kind::IidNormal;
  s.mean_ = std::move(mean);
  s.cov_ = 0.5 * (covariance + covariance.transpose());
  s.factor_ = psd_factor(covariance);
  return s;
}

NoiseSpec NoiseSpec::iid_discrete(std::vector<DiscreteDistribution> components) {
  if (components.empty())
    throw ValidationError("InvalidSpec", "noise needs at least one factor");
  NoiseSpec s;
  s.kind_ = Kind::IidDiscrete;
  const int p = static_cast<int>(components.size());
  s.mean_.resize(p);
  s.cov_ = Eigen::MatrixXd::Zero(p, p);
  for (int k = 0; k < p; ++k) {
    s.mean_[k] = components[k].mean();
    s.cov_(k, k) = components[k].variance();
  }
  s.components_ = std::move(components);
  return s;
}

NoiseSpec NoiseSpec::ar1_normal(Eigen::VectorXd mean, Eigen::MatrixXd stationary_cov,
                                double rho) {
  check_mean_cov(mean, stationary_cov);
  if (!(rho > -1.0 && rho < 1.0))
    throw ValidationError("InvalidSpec", "ar1 needs rho strictly inside (-1,1)");
  NoiseSpec s;
  s.kind_ = Kind::Ar1Normal;
  s.mean_ = std::move(mean);
  s.cov_ = 0.5 * (stationary_cov + stationary_cov.transpose());
  s.factor_ = psd_factor(stationary_cov);
  s.rho_ = rho;
  return s;
}

bool NoiseSpec::zero_mean() const {
  if (kind_ == Kind::IidDiscrete) {
    for (int k = 0; k < factor_dim(); ++k)
      if (std::abs(mean_[k]) > DiscreteDistribution::kProbTol) return false;
    return true;
  }
  return (mean_.array() == 0.0).all();
}

Eigen::VectorXd ScenarioSampler::next() {
  const int p = spec_.factor_dim();
  Eigen::VectorXd eps(p);
  switch (spec_.kind()) {
    case NoiseSpec::Kind::IidDiscrete:
      for (int k = 0; k < p; ++k) eps[k] = spec_.components_[k].sample(rng_);
      return eps;
    case NoiseSpec::Kind::IidNormal: {
      Eigen::VectorXd z(p);
      for (int k = 0; k < p; ++k) z[k] = rng_.normal();
      return spec_.mean_ + spec_.factor_ * z;
    }
    case NoiseSpec::Kind::Ar1Normal: {
      Eigen::VectorXd z(p);
      for (int k = 0; k < p; ++k) z[k] = rng_.normal();
      if (!started_) {
        started_ = true;
        state_ = spec_.mean_ + spec_.factor_ * z;
      } else {
        state_ = spec_.mean_ + spec_.rho_ * (state_ - spec_.mean_) +
                 std::sqrt(1.0 - spec_.rho_ * spec_.rho_) * (spec_.factor_ * z);
      }
      return state_;
    }
  }
  return eps;
}

Scenario sample_scenario(const NoiseSpec& spec, int horizon, Rng& rng) {
  if (horizon < 1)
    throw ValidationError("InvalidSpec", "scenario horizon must be >= 1");
  Scenario sc;
  sc.factors.resize(horizon, spec.factor_dim());
  ScenarioSampler sampler(spec, rng);
  for (int t = 0; t < horizon; ++t) sc.factors.row(t) = sampler.next().transpose();
  return sc;
}

Scenario sample_scenario(const NoiseSpec& spec, int horizon, std::uint64_t seed) {
  Rng rng(seed);
  return sample_scenario(spec, horizon, rng);
}

const char* to_string(Coupling c) {
  return c == Coupling::AdditiveNoise ? "additive" : "dilation";
}

const char* to_string(ClaimedOrder o) { return o == ClaimedOrder::Cx ? "cx" : "icx"; }

ScenarioPair couple_additive(const Scenario& base, const NoiseSpec& noise, Rng& rng) {
  if (noise.factor_dim() != base.factor_dim())
    throw ValidationError("DimensionMismatch", "noise dimension does not match scenario");
  if (!noise.zero_mean())
    throw ValidationError("NonZeroMeanNoise",
                          "additive coupling needs zero-mean noise");
  ScenarioPair pair;
  pair.low = base;
  pair.high = base;
  pair.high.factors += sample_scenario(noise, base.horizon(), rng).factors;
  pair.coupling = Coupling::AdditiveNoise;
  pair.claimed_order = ClaimedOrder::Cx;
  return pair;
}

ScenarioPair couple_dilation(const NoiseSpec& spec, int horizon, double c, Rng& rng) {
  if (!(c >= 1.0))
    throw ValidationError("InvalidSpec", "dilation factor must be >= 1");
  ScenarioPair pair;
  pair.low = sample_scenario(spec, horizon, rng);
  pair.high = pair.low;
  const Eigen::RowVectorXd m = spec.mean().transpose();
  for (int t = 0; t < horizon; ++t)
    pair.high.factors.row(t) = m + c * (pair.low.factors.row(t) - m);
  pair.coupling = Coupling::Dilation;
  pair.dilation_factor = c;
  pair.claimed_order = ClaimedOrder::Cx;
  return pair;
}

EmpiricalSample marginal_distribution(const std::vector<Scenario>& replicates,
                                      int t, int k) {
  if (replicates.empty())
    throw ValidationError("IndexOutOfRange", "no replicates supplied");
  EmpiricalSample s;
  s.draws.reserve(replicates.size());
  for (const Scenario& sc : replicates) {
    if (t < 0 || t >= sc.horizon() || k < 0 || k >= sc.factor_dim())
      throw ValidationError("IndexOutOfRange", "marginal index outside scenario");
    s.draws.push_back(sc.factors(t, k));
  }
  return s;
}

}  // namespace varorder
