#include "varorder/matrix_model.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "varorder/errors.hpp"

namespace varorder {

MatrixSpec::MatrixSpec(int dim_, int factor_dim_, std::vector<EntryFunction> entries_)
    : dim(dim_), factor_dim(factor_dim_), entries(std::move(entries_)) {
  if (dim < 1) throw ValidationError("InvalidSpec", "matrix dimension must be >= 1");
  if (factor_dim < 1)
    throw ValidationError("InvalidSpec", "environment dimension must be >= 1");
  if (entries.size() != static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim))
    throw ValidationError("DimensionMismatch",
                          "expected " + std::to_string(dim * dim) + " entries, got " +
                              std::to_string(entries.size()));
  for (const EntryFunction& e : entries)
    if (e.max_factor_index() >= factor_dim)
      throw ValidationError("DimensionMismatch",
                            "entry references factor " + std::to_string(e.max_factor_index()) +
                                " outside environment of dimension " +
                                std::to_string(factor_dim));
}

const EntryFunction& MatrixSpec::entry(int i, int j) const {
  if (i < 0 || i >= dim || j < 0 || j >= dim)
    throw ValidationError("IndexOutOfRange", "entry index outside matrix");
  return entries[static_cast<std::size_t>(i) * dim + j];
}

bool MatrixSpec::has_affine_entries() const {
  for (const EntryFunction& e : entries)
    if (e.hypothesis_violating()) return true;
  return false;
}

bool MatrixSpec::all_linear() const {
  for (const EntryFunction& e : entries)
    if (e.kind() != EntryFunction::Kind::Constant &&
        e.kind() != EntryFunction::Kind::Affine)
      return false;
  return true;
}

PopulationVector::PopulationVector(Eigen::VectorXd a) : abundances(std::move(a)) {
  if (abundances.size() < 1)
    throw ValidationError("InvalidSpec", "population vector is empty");
  if (!abundances.allFinite() || abundances.minCoeff() < 0.0)
    throw ValidationError("InvalidSpec", "abundances must be finite and >= 0");
  if (abundances.maxCoeff() <= 0.0)
    throw ValidationError("InvalidSpec", "population must have at least one positive stage");
}

SizeFunctional::SizeFunctional(Eigen::VectorXd w, bool log_scale_)
    : weights(std::move(w)), log_scale(log_scale_) {
  if (weights.size() < 1)
    throw ValidationError("InvalidSpec", "size functional is empty");
  if (!weights.allFinite() || weights.minCoeff() < 0.0)
    throw ValidationError("InvalidSpec", "size weights must be finite and >= 0");
  if (weights.maxCoeff() <= 0.0)
    throw ValidationError("InvalidSpec", "size functional needs a positive weight");
}

SizeFunctional SizeFunctional::total(int dim, bool log_scale) {
  return SizeFunctional(Eigen::VectorXd::Ones(dim), log_scale);
}

Eigen::MatrixXd evaluate_matrix(const MatrixSpec& spec, const Eigen::VectorXd& eps) {
  if (eps.size() != spec.factor_dim)
    throw ValidationError("DimensionMismatch",
                          "environment vector has dimension " + std::to_string(eps.size()) +
                              ", model expects " + std::to_string(spec.factor_dim));
  Eigen::MatrixXd m(spec.dim, spec.dim);
  for (int i = 0; i < spec.dim; ++i)
    for (int j = 0; j < spec.dim; ++j) {
      const double v = spec.entries[static_cast<std::size_t>(i) * spec.dim + j].evaluate(eps);
      if (!std::isfinite(v))
        throw SimulationError("Overflow", "entry (" + std::to_string(i) + "," +
                                              std::to_string(j) + ") is not finite");
      if (v < 0.0)
        throw SimulationError("NegativeEntry",
                              "entry (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") evaluated to " + std::to_string(v));
      m(i, j) = v;
    }
  return m;
}

std::vector<Eigen::VectorXd> propagate(const MatrixSpec& spec,
                                       const PopulationVector& n0,
                                       const Scenario& scenario) {
  if (n0.dim() != spec.dim)
    throw ValidationError("DimensionMismatch", "population dimension does not match model");
  if (scenario.factor_dim() != spec.factor_dim)
    throw ValidationError("DimensionMismatch", "scenario dimension does not match model");
  std::vector<Eigen::VectorXd> path;
  path.reserve(static_cast<std::size_t>(scenario.horizon()) + 1);
  path.push_back(n0.abundances);
  for (int t = 0; t < scenario.horizon(); ++t) {
    const Eigen::MatrixXd a = evaluate_matrix(spec, scenario.factors.row(t).transpose());
    Eigen::VectorXd next = a * path.back();
    if (!next.allFinite())
      throw SimulationError("Overflow",
                            "population overflowed at step " + std::to_string(t + 1));
    path.push_back(std::move(next));
  }
  return path;
}

double size(const Eigen::VectorXd& n, const SizeFunctional& f) {
  if (n.size() != f.weights.size())
    throw ValidationError("DimensionMismatch", "size functional does not match population");
  const double s = f.weights.dot(n);
  if (!f.log_scale) return s;
  if (!(s > 0.0))
    throw SimulationError("LogOfZero", "size is not positive, log undefined");
  return std::log(s);
}

LogTrajectory propagate_log(const MatrixSpec& spec, const PopulationVector& n0,
                            const Scenario& scenario, const SizeFunctional& f) {
  if (n0.dim() != spec.dim)
    throw ValidationError("DimensionMismatch", "population dimension does not match model");
  if (scenario.factor_dim() != spec.factor_dim)
    throw ValidationError("DimensionMismatch", "scenario dimension does not match model");
  if (f.weights.size() != spec.dim)
    throw ValidationError("DimensionMismatch", "size functional does not match population");

  const int horizon = scenario.horizon();
  LogTrajectory out;
  out.log_size.reserve(static_cast<std::size_t>(horizon) + 1);
  out.log_norm.reserve(static_cast<std::size_t>(horizon) + 1);

  double norm = n0.abundances.sum();
  Eigen::VectorXd u = n0.abundances / norm;
  double acc = std::log(norm);

  const auto record = [&](const Eigen::VectorXd& dir, double log_norm) {
    const double s = f.weights.dot(dir);
    if (!(s > 0.0))
      throw SimulationError("LogOfZero", "size is not positive, log undefined");
    out.log_size.push_back(std::log(s) + log_norm);
    out.log_norm.push_back(log_norm);
  };

  record(u, acc);
  for (int t = 0; t < horizon; ++t) {
    const Eigen::MatrixXd a = evaluate_matrix(spec, scenario.factors.row(t).transpose());
    Eigen::VectorXd m = a * u;
    const double s = m.sum();  // 1-norm: entries stay >= 0
    if (!std::isfinite(s))
      throw SimulationError("Overflow", "population overflowed at step " + std::to_string(t + 1));
    if (s <= 0.0)
      throw SimulationError("ExtinctTrajectory",
                            "population hit zero at step " + std::to_string(t + 1));
    u = m / s;
    acc += std::log(s);
    record(u, acc);
  }
  out.final_direction = u;
  return out;
}

bool is_primitive(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n != m.cols() || n < 1)
    throw ValidationError("InvalidSpec", "primitivity needs a square matrix");
  if (m.minCoeff() < 0.0)
    throw ValidationError("InvalidSpec", "primitivity check needs a nonnegative matrix");
  if (n > 64)
    throw ValidationError("InvalidSpec", "primitivity check supports dimension <= 64");

  // Adjacency rows as bitmasks; b[i] bit j set iff m(i,j) > 0.
  std::vector<std::uint64_t> b(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m(i, j) > 0.0) b[i] |= std::uint64_t{1} << j;

  const auto mul = [n](const std::vector<std::uint64_t>& x,
                       const std::vector<std::uint64_t>& y) {
    std::vector<std::uint64_t> r(n, 0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        if (x[i] >> k & 1) r[i] |= y[k];
    return r;
  };

  // Wielandt: primitive iff the pattern of m^(n^2 - 2n + 2) is full.
  int target = n * n - 2 * n + 2;
  std::vector<std::uint64_t> acc(n, 0);
  for (int i = 0; i < n; ++i) acc[i] = std::uint64_t{1} << i;
  std::vector<std::uint64_t> p = b;
  while (target > 0) {
    if (target & 1) acc = mul(acc, p);
    p = mul(p, p);
    target >>= 1;
  }
  const std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  for (int i = 0; i < n; ++i)
    if (acc[i] != full) return false;
  return true;
}

}  // namespace varorder
