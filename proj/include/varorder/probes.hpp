#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "varorder/matrix_model.hpp"

namespace varorder {

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  int dim() const { return static_cast<int>(lo.size()); }
};

// A counterexample to convexity of `functional`: at the reported points
// and mixing weight, f(lambda x + (1-lambda) y) exceeds the chord.
struct ConvexityWitness {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double lambda = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string functional;
};

struct ProbeResult {
  bool pass = true;
  std::optional<ConvexityWitness> witness;
  long trials_run = 0;
};

inline constexpr double kProbeTol = 1e-9;

// Random search for a violation of log-convexity of one entry over the
// box. The entry must stay positive on the box (NonPositiveValue if a
// sample point says otherwise).
ProbeResult logconvexity_probe(const EntryFunction& entry, const Box& box,
                               long trials, std::uint64_t seed,
                               double tol = kProbeTol);

// Random search for a violation of convexity of the end-time size, and of
// its log, as functions of the whole stacked scenario. The box bounds each
// eps(t); points are drawn independently per step. Tolerance is relative.
ProbeResult scenario_convexity_probe(const MatrixSpec& spec,
                                     const PopulationVector& n0,
                                     const SizeFunctional& f, int horizon,
                                     const Box& step_box, long trials,
                                     std::uint64_t seed, double tol = kProbeTol);

}  // namespace varorder
