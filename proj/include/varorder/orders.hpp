#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "varorder/distribution.hpp"

namespace varorder {

// X icx Y  iff  E(X-c)+ <= E(Y-c)+ for every threshold c.
// X cx  Y  iff  additionally E X = E Y (equivalently the lower transform
// E(c-X)+ is dominated as well).

enum class Relation { Less, Greater, Equal, NotComparable };

const char* to_string(Relation r);

// Default absolute tolerance on transform comparisons. Differences within
// tol count as ties, so Equal means "equal up to tol".
inline constexpr double kOrderTol = 1e-9;

struct OrderVerdict {
  Relation relation = Relation::NotComparable;
  // Populated when relation == NotComparable: thresholds (or scalar
  // certificates, for the parametric families) at which each direction of
  // dominance fails by more than the tolerance.
  std::optional<double> witness_less;     // where "first below second" fails
  std::optional<double> witness_greater;  // where "second below first" fails
};

OrderVerdict icx_compare(const DiscreteDistribution& x,
                         const DiscreteDistribution& y, double tol = kOrderTol);
OrderVerdict cx_compare(const DiscreteDistribution& x,
                        const DiscreteDistribution& y, double tol = kOrderTol);

// ---------------------------------------------------------------------
// Normal laws, closed form.

struct NormalSpec {
  double mean = 0.0;
  double variance = 0.0;

  NormalSpec(double m, double var);
};

// E(X-c)+ for X ~ N(mean, variance).
double normal_stop_loss(const NormalSpec& x, double c);

// icx reduces to mean <= and variance <=; cx to mean == and variance <=.
OrderVerdict normal_icx_compare(const NormalSpec& x, const NormalSpec& y,
                                double tol = kOrderTol);
OrderVerdict normal_cx_compare(const NormalSpec& x, const NormalSpec& y,
                               double tol = kOrderTol);

// ---------------------------------------------------------------------
// Multivariate normal laws.

struct MvNormalSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  MvNormalSpec(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
  int dim() const { return static_cast<int>(mean.size()); }
};

// cx is exact: means equal and covariance difference positive semidefinite.
// Witnesses on NotComparable are the largest mean gap and the most negative
// eigenvalue of the covariance difference.
OrderVerdict mvnormal_cx_compare(const MvNormalSpec& x, const MvNormalSpec& y,
                                 double tol = kOrderTol);

// icx has a sufficient condition (componentwise mean dominance plus psd
// covariance difference) and a necessary one (a'(Cov Y - Cov X)a >= 0 for
// every nonnegative direction a). The evidence reports which side settled
// the question.
enum class IcxEvidenceKind {
  SufficientHolds,   // mean(Y) >= mean(X) componentwise and Cov Y - Cov X psd
  NecessaryHolds,    // sufficient condition failed, necessary one checked out
  NecessaryFails,    // a nonnegative direction violates the variance ordering
};

struct MvIcxEvidence {
  IcxEvidenceKind kind = IcxEvidenceKind::NecessaryHolds;
  // Violating direction (unit 1-norm, nonnegative) when NecessaryFails.
  std::optional<Eigen::VectorXd> direction;
  double mean_gap = 0.0;  // a'(mean Y - mean X), at the reported direction
                          // on failure, otherwise the minimum observed
  double quad_gap = 0.0;  // a'(Cov Y - Cov X)a, same convention
};

MvIcxEvidence mvnormal_icx_evidence(const MvNormalSpec& x, const MvNormalSpec& y,
                                    double tol = kOrderTol,
                                    std::uint64_t seed = 20240915,
                                    int random_directions = 1000);

// ---------------------------------------------------------------------
// Sample-based falsification for vector-valued draws.

// Test functions phi(z) = max(a.z - c, 0) over nonnegative directions a
// (unit 1-norm) with a ladder of thresholds per direction, spread over the
// pooled range of the projected samples.
struct TestFunctionFamily {
  Eigen::MatrixXd directions;  // one direction per row
  int thresholds_per_direction = 20;

  // All nonnegative integer combinations k/divisions summing to 1, plus
  // seeded random draws from the simplex.
  static TestFunctionFamily simplex_grid(int dim, int divisions = 16,
                                         int random_directions = 64,
                                         std::uint64_t seed = 20240915);
};

struct VecOrderEvidence {
  bool falsified = false;
  // Populated when falsified: the witness test function and the sample
  // means of phi under each set of draws.
  Eigen::VectorXd direction;
  double threshold = 0.0;
  double mean_first = 0.0;
  double mean_second = 0.0;
  double z_score = 0.0;
};

// Looks for a test function whose sample mean under xs exceeds the one
// under ys by more than z_margin standard errors. Finding one falsifies
// "law(xs) icx law(ys)"; finding none is evidence, not proof.
VecOrderEvidence empirical_icx_evidence_vec(const Eigen::MatrixXd& xs,
                                            const Eigen::MatrixXd& ys,
                                            const TestFunctionFamily& family,
                                            double z_margin = 4.0);

}  // namespace varorder
