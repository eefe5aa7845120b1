#pragma once

#include <string>
#include <vector>

#include "varorder/rng.hpp"

namespace varorder {

struct Atom {
  double value = 0.0;
  double probability = 0.0;
};

// Finite-support scalar law in canonical form: values strictly increasing
// (inputs closer than kMergeTol are merged), probabilities in (0,1] and
// summing to 1 within kProbTol. The probabilities are kept exactly as
// given, never renormalized.
class DiscreteDistribution {
public:
  static constexpr double kProbTol = 1e-12;
  static constexpr double kMergeTol = 1e-12;

  explicit DiscreteDistribution(std::vector<Atom> atoms);

  static DiscreteDistribution point_mass(double value);
  // Equal weight on each listed value (duplicates merge and accumulate).
  static DiscreteDistribution uniform(const std::vector<double>& values);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  double mean() const { return mean_; }
  double variance() const;
  double min_value() const { return atoms_.front().value; }
  double max_value() const { return atoms_.back().value; }

  double sample(Rng& rng) const;

  // One "value,probability" row per atom; parse accepts an optional header.
  std::string to_csv() const;
  static DiscreteDistribution from_csv(const std::string& text);

private:
  std::vector<Atom> atoms_;
  std::vector<double> cum_;
  double mean_ = 0.0;
};

// Equal-weight draws, e.g. simulation output at a fixed time.
struct EmpiricalSample {
  std::vector<double> draws;

  DiscreteDistribution to_distribution() const;
  double mean() const;
};

// E(X - c)_+ by direct summation over atoms.
double stop_loss(const DiscreteDistribution& d, double c);

// E(c - X)_+, the companion transform used for convex-order checks.
double lower_stop_loss(const DiscreteDistribution& d, double c);

// E(X^p)^(1/p) / E(X) for p >= 1; requires strictly positive support.
double cv_p(const DiscreteDistribution& d, double p);

// Law of X + Y for independent X, Y.
DiscreteDistribution convolve(const DiscreteDistribution& x,
                              const DiscreteDistribution& y);

}  // namespace varorder
