#include "varorder/orders.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "varorder/errors.hpp"

namespace varorder {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// O(log n) stop-loss queries against a fixed law via suffix sums.
class StopLossEvaluator {
public:
  explicit StopLossEvaluator(const DiscreteDistribution& d) {
    const auto& atoms = d.atoms();
    const std::size_t n = atoms.size();
    values_.resize(n);
    suf_p_.assign(n + 1, 0.0);
    suf_pv_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) values_[i] = atoms[i].value;
    for (std::size_t i = n; i-- > 0;) {
      suf_p_[i] = suf_p_[i + 1] + atoms[i].probability;
      suf_pv_[i] = suf_pv_[i + 1] + atoms[i].probability * atoms[i].value;
    }
    mean_ = d.mean();
  }

  double stop_loss(double c) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), c);
    const std::size_t i = static_cast<std::size_t>(it - values_.begin());
    return std::max(0.0, suf_pv_[i] - c * suf_p_[i]);
  }

  double lower_stop_loss(double c) const {
    return std::max(0.0, stop_loss(c) + c - mean_);
  }

  double mean() const { return mean_; }

private:
  std::vector<double> values_;
  std::vector<double> suf_p_, suf_pv_;
  double mean_ = 0.0;
};

std::vector<double> merged_knots(const DiscreteDistribution& x,
                                 const DiscreteDistribution& y) {
  std::vector<double> knots;
  knots.reserve(x.size() + y.size());
  for (const Atom& a : x.atoms()) knots.push_back(a.value);
  for (const Atom& a : y.atoms()) knots.push_back(a.value);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  return knots;
}

struct Violations {
  double worst_xy = 0.0;  // largest excess of the x-transform over the y-transform
  double at_xy = 0.0;
  double worst_yx = 0.0;
  double at_yx = 0.0;

  void record(double diff, double c) {
    if (diff > worst_xy) {
      worst_xy = diff;
      at_xy = c;
    }
    if (-diff > worst_yx) {
      worst_yx = -diff;
      at_yx = c;
    }
  }

  OrderVerdict verdict(double tol) const {
    OrderVerdict v;
    const bool fail_xy = worst_xy > tol;
    const bool fail_yx = worst_yx > tol;
    if (fail_xy && fail_yx) {
      v.relation = Relation::NotComparable;
      v.witness_less = at_xy;
      v.witness_greater = at_yx;
    } else if (fail_xy) {
      v.relation = Relation::Greater;
    } else if (fail_yx) {
      v.relation = Relation::Less;
    } else {
      v.relation = Relation::Equal;
    }
    return v;
  }
};

}  // namespace

const char* to_string(Relation r) {
  switch (r) {
    case Relation::Less: return "less";
    case Relation::Greater: return "greater";
    case Relation::Equal: return "equal";
    case Relation::NotComparable: return "not_comparable";
  }
  return "?";
}

// Both stop-loss transforms are piecewise linear with knots at the atoms,
// and their difference tends to mean(x)-mean(y) on the left and 0 on the
// right, both of which are attained at the extreme knots. Comparing at the
// merged knots is therefore exhaustive.
OrderVerdict icx_compare(const DiscreteDistribution& x,
                         const DiscreteDistribution& y, double tol) {
  const StopLossEvaluator ex(x), ey(y);
  Violations v;
  for (double c : merged_knots(x, y)) v.record(ex.stop_loss(c) - ey.stop_loss(c), c);
  return v.verdict(tol);
}

// Convex order adds the lower transform E(c-X)+, which catches mean
// differences on the right tail; dominance must hold for both transforms.
OrderVerdict cx_compare(const DiscreteDistribution& x,
                        const DiscreteDistribution& y, double tol) {
  const StopLossEvaluator ex(x), ey(y);
  Violations v;
  for (double c : merged_knots(x, y)) {
    v.record(ex.stop_loss(c) - ey.stop_loss(c), c);
    v.record(ex.lower_stop_loss(c) - ey.lower_stop_loss(c), c);
  }
  return v.verdict(tol);
}

NormalSpec::NormalSpec(double m, double var) : mean(m), variance(var) {
  if (!std::isfinite(m) || !std::isfinite(var) || var < 0.0)
    throw ValidationError("InvalidSpec", "normal spec needs finite mean and variance >= 0");
}

double normal_stop_loss(const NormalSpec& x, double c) {
  const double sd = std::sqrt(x.variance);
  if (sd == 0.0) return std::max(x.mean - c, 0.0);
  const double d = (c - x.mean) / sd;
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * d * d);
  const double upper_cdf = 0.5 * std::erfc(d / std::sqrt(2.0));
  return std::max(0.0, sd * pdf + (x.mean - c) * upper_cdf);
}

namespace {

// Best-effort witness scan for normal pairs: closed-form stop-loss values
// on a grid around both means. Violations smaller than tol everywhere
// leave the witness empty.
Violations normal_scan(const NormalSpec& x, const NormalSpec& y) {
  Violations v;
  const double sx = std::sqrt(x.variance), sy = std::sqrt(y.variance);
  const double far_scale = std::max({sx, sy, 1.0});
  std::vector<double> cs;
  cs.push_back(std::min(x.mean, y.mean) - 40.0 * far_scale);
  for (int k = -48; k <= 48; ++k) {
    cs.push_back(x.mean + 0.25 * k * (sx > 0 ? sx : far_scale));
    cs.push_back(y.mean + 0.25 * k * (sy > 0 ? sy : far_scale));
  }
  for (double c : cs) v.record(normal_stop_loss(x, c) - normal_stop_loss(y, c), c);
  return v;
}

OrderVerdict normal_verdict(bool xy_holds, bool yx_holds, const NormalSpec& x,
                            const NormalSpec& y) {
  OrderVerdict v;
  if (xy_holds && yx_holds) {
    v.relation = Relation::Equal;
  } else if (xy_holds) {
    v.relation = Relation::Less;
  } else if (yx_holds) {
    v.relation = Relation::Greater;
  } else {
    v.relation = Relation::NotComparable;
    const Violations scan = normal_scan(x, y);
    if (scan.worst_xy > 0) v.witness_less = scan.at_xy;
    if (scan.worst_yx > 0) v.witness_greater = scan.at_yx;
  }
  return v;
}

}  // namespace

// For normal laws the order reduces to parameter comparisons: icx needs
// mean <= and variance <=, cx needs mean equal and variance <=. The
// tolerance is applied to the parameter gaps.
OrderVerdict normal_icx_compare(const NormalSpec& x, const NormalSpec& y, double tol) {
  const bool xy = x.mean <= y.mean + tol && x.variance <= y.variance + tol;
  const bool yx = y.mean <= x.mean + tol && y.variance <= x.variance + tol;
  return normal_verdict(xy, yx, x, y);
}

OrderVerdict normal_cx_compare(const NormalSpec& x, const NormalSpec& y, double tol) {
  const bool means_equal = std::abs(x.mean - y.mean) <= tol;
  const bool xy = means_equal && x.variance <= y.variance + tol;
  const bool yx = means_equal && y.variance <= x.variance + tol;
  return normal_verdict(xy, yx, x, y);
}

MvNormalSpec::MvNormalSpec(Eigen::VectorXd m, Eigen::MatrixXd cov)
    : mean(std::move(m)), covariance(std::move(cov)) {
  if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size())
    throw ValidationError("DimensionMismatch", "mean and covariance sizes disagree");
  if (!mean.allFinite() || !covariance.allFinite())
    throw ValidationError("InvalidSpec", "non-finite multivariate normal parameters");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ValidationError("InvalidSpec", "covariance is not symmetric");
  covariance = 0.5 * (covariance + covariance.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw ValidationError("InvalidSpec", "covariance is not positive semidefinite");
}

namespace {

double min_eigenvalue(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  return es.eigenvalues().minCoeff();
}

}  // namespace

OrderVerdict mvnormal_cx_compare(const MvNormalSpec& x, const MvNormalSpec& y,
                                 double tol) {
  if (x.dim() != y.dim())
    throw ValidationError("DimensionMismatch", "laws live in different dimensions");
  const double mean_gap = (x.mean - y.mean).cwiseAbs().maxCoeff();
  const double lam_xy = min_eigenvalue(y.covariance - x.covariance);
  const double lam_yx = min_eigenvalue(x.covariance - y.covariance);
  const bool xy = mean_gap <= tol && lam_xy >= -tol;
  const bool yx = mean_gap <= tol && lam_yx >= -tol;
  OrderVerdict v;
  if (xy && yx) {
    v.relation = Relation::Equal;
  } else if (xy) {
    v.relation = Relation::Less;
  } else if (yx) {
    v.relation = Relation::Greater;
  } else {
    v.relation = Relation::NotComparable;
    v.witness_less = std::max(mean_gap, std::max(0.0, -lam_xy));
    v.witness_greater = std::max(mean_gap, std::max(0.0, -lam_yx));
  }
  return v;
}

TestFunctionFamily TestFunctionFamily::simplex_grid(int dim, int divisions,
                                                    int random_directions,
                                                    std::uint64_t seed) {
  if (dim < 1) throw ValidationError("InvalidSpec", "dimension must be positive");
  if (divisions < 1) throw ValidationError("InvalidSpec", "divisions must be positive");
  std::vector<Eigen::VectorXd> rows;
  Eigen::VectorXd work(dim);
  // All (k_1,...,k_d) >= 0 with sum == divisions, scaled to unit 1-norm.
  const std::function<void(int, int)> emit = [&](int pos, int left) {
    if (pos == dim - 1) {
      work[pos] = left;
      rows.push_back(work / static_cast<double>(divisions));
      return;
    }
    for (int k = left; k >= 0; --k) {
      work[pos] = k;
      emit(pos + 1, left - k);
    }
  };
  emit(0, divisions);

  Rng rng(seed);
  for (int r = 0; r < random_directions; ++r) {
    Eigen::VectorXd a(dim);
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
      a[i] = -std::log(rng.uniform01());
      total += a[i];
    }
    rows.push_back(a / total);
  }

  TestFunctionFamily fam;
  fam.directions.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (Eigen::Index i = 0; i < fam.directions.rows(); ++i)
    fam.directions.row(i) = rows[static_cast<std::size_t>(i)];
  return fam;
}

MvIcxEvidence mvnormal_icx_evidence(const MvNormalSpec& x, const MvNormalSpec& y,
                                    double tol, std::uint64_t seed,
                                    int random_directions) {
  if (x.dim() != y.dim())
    throw ValidationError("DimensionMismatch", "laws live in different dimensions");
  const Eigen::VectorXd dmean = y.mean - x.mean;
  const Eigen::MatrixXd dcov = y.covariance - x.covariance;

  MvIcxEvidence ev;
  if (dmean.minCoeff() >= -tol && min_eigenvalue(dcov) >= -tol) {
    ev.kind = IcxEvidenceKind::SufficientHolds;
    ev.mean_gap = dmean.minCoeff();
    ev.quad_gap = min_eigenvalue(dcov);
    return ev;
  }

  const TestFunctionFamily fam =
      TestFunctionFamily::simplex_grid(x.dim(), 16, random_directions, seed);
  double worst_mean = std::numeric_limits<double>::infinity();
  double worst_quad = std::numeric_limits<double>::infinity();
  Eigen::Index worst_mean_row = 0, worst_quad_row = 0;
  for (Eigen::Index i = 0; i < fam.directions.rows(); ++i) {
    const Eigen::VectorXd a = fam.directions.row(i).transpose();
    const double mg = a.dot(dmean);
    const double qg = a.dot(dcov * a);
    if (mg < worst_mean) {
      worst_mean = mg;
      worst_mean_row = i;
    }
    if (qg < worst_quad) {
      worst_quad = qg;
      worst_quad_row = i;
    }
  }
  const Eigen::Index row = worst_mean < -tol ? worst_mean_row : worst_quad_row;
  if (worst_mean < -tol || worst_quad < -tol) {
    ev.kind = IcxEvidenceKind::NecessaryFails;
    const Eigen::VectorXd a = fam.directions.row(row).transpose();
    ev.direction = a;
    ev.mean_gap = a.dot(dmean);
    ev.quad_gap = a.dot(dcov * a);
  } else {
    ev.kind = IcxEvidenceKind::NecessaryHolds;
    ev.mean_gap = worst_mean;
    ev.quad_gap = worst_quad;
  }
  return ev;
}

VecOrderEvidence empirical_icx_evidence_vec(const Eigen::MatrixXd& xs,
                                            const Eigen::MatrixXd& ys,
                                            const TestFunctionFamily& family,
                                            double z_margin) {
  if (xs.cols() != ys.cols())
    throw ValidationError("DimensionMismatch", "draw matrices have different widths");
  if (family.directions.rows() == 0)
    throw ValidationError("EmptyFamily", "no test directions supplied");
  if (family.directions.cols() != xs.cols())
    throw ValidationError("DimensionMismatch", "directions do not match draw width");
  if (xs.rows() < 2 || ys.rows() < 2)
    throw ValidationError("InvalidSpec", "need at least two draws per side");
  if (family.thresholds_per_direction < 1)
    throw ValidationError("InvalidSpec", "need at least one threshold per direction");

  const double nx = static_cast<double>(xs.rows());
  const double ny = static_cast<double>(ys.rows());
  VecOrderEvidence best;
  double best_z = -std::numeric_limits<double>::infinity();

  for (Eigen::Index i = 0; i < family.directions.rows(); ++i) {
    const Eigen::VectorXd a = family.directions.row(i).transpose();
    const Eigen::VectorXd px = xs * a;
    const Eigen::VectorXd py = ys * a;
    const double lo = std::min(px.minCoeff(), py.minCoeff());
    const double hi = std::max(px.maxCoeff(), py.maxCoeff());
    if (!(hi > lo)) continue;
    const int m = family.thresholds_per_direction;
    for (int j = 1; j <= m; ++j) {
      const double c = lo + (hi - lo) * j / (m + 1.0);
      double sx = 0, sxx = 0, sy = 0, syy = 0;
      for (Eigen::Index r = 0; r < px.size(); ++r) {
        const double v = std::max(px[r] - c, 0.0);
        sx += v;
        sxx += v * v;
      }
      for (Eigen::Index r = 0; r < py.size(); ++r) {
        const double v = std::max(py[r] - c, 0.0);
        sy += v;
        syy += v * v;
      }
      const double mx = sx / nx, my = sy / ny;
      const double vx = std::max(0.0, sxx / nx - mx * mx) * nx / (nx - 1);
      const double vy = std::max(0.0, syy / ny - my * my) * ny / (ny - 1);
      const double se = std::sqrt(vx / nx + vy / ny);
      const double gap = mx - my;
      if (gap <= 0) continue;
      const double z = se > 0 ? gap / se : std::numeric_limits<double>::infinity();
      if (z > best_z) {
        best_z = z;
        best.direction = a;
        best.threshold = c;
        best.mean_first = mx;
        best.mean_second = my;
        best.z_score = z;
      }
    }
  }
  best.falsified = best_z > z_margin;
  if (!best.falsified && best_z == -std::numeric_limits<double>::infinity()) {
    best.z_score = 0.0;
  }
  return best;
}

}  // namespace varorder
