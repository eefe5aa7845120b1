#pragma once

#include <Eigen/Dense>
#include <vector>

#include "varorder/entry_function.hpp"
#include "varorder/scenario.hpp"

namespace varorder {

// Square matrix of entry functions driven by a shared environment vector.
struct MatrixSpec {
  int dim = 0;
  int factor_dim = 0;
  std::vector<EntryFunction> entries;  // row-major, dim*dim

  MatrixSpec(int dim, int factor_dim, std::vector<EntryFunction> entries);

  const EntryFunction& entry(int i, int j) const;
  bool has_affine_entries() const;
  // All entries linear in eps (Constant or Affine).
  bool all_linear() const;
};

struct PopulationVector {
  Eigen::VectorXd abundances;

  explicit PopulationVector(Eigen::VectorXd abundances);
  int dim() const { return static_cast<int>(abundances.size()); }
};

// Observable a.n(t), optionally on the log scale.
struct SizeFunctional {
  Eigen::VectorXd weights;
  bool log_scale = false;

  explicit SizeFunctional(Eigen::VectorXd weights, bool log_scale = false);
  static SizeFunctional total(int dim, bool log_scale = false);
};

// A(eps); throws NegativeEntry / Overflow on bad values.
Eigen::MatrixXd evaluate_matrix(const MatrixSpec& spec, const Eigen::VectorXd& eps);

// n(0..T) under the scenario, plain arithmetic.
std::vector<Eigen::VectorXd> propagate(const MatrixSpec& spec,
                                       const PopulationVector& n0,
                                       const Scenario& scenario);

double size(const Eigen::VectorXd& n, const SizeFunctional& f);

// Overflow-safe propagation: the direction is renormalized to unit 1-norm
// every step and the log norm accumulated separately.
struct LogTrajectory {
  std::vector<double> log_size;  // log(weights . n(t)), t = 0..T
  std::vector<double> log_norm;  // log |n(t)|_1,       t = 0..T
  Eigen::VectorXd final_direction;
};

LogTrajectory propagate_log(const MatrixSpec& spec, const PopulationVector& n0,
                            const Scenario& scenario, const SizeFunctional& f);

// Wielandt test: the zero pattern of m admits a power with all entries
// positive. m must be componentwise nonnegative.
bool is_primitive(const Eigen::MatrixXd& m);

}  // namespace varorder
