#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace varorder {

// One matrix entry as a function of the environment vector eps.
//
//   Constant            c                        (c >= 0)
//   Affine              b + sum_k coef_k eps_k
//   ExpAffine           exp(b + sum_k coef_k eps_k)
//   NonnegCombination   sum_j w_j * ExpAffine_j  (w_j >= 0)
//
// Text form, factor indices 0-based:
//   const:0.5
//   affine:1,0:1
//   expaffine:-0.7,0:1,1:0.25
//   sum:0.6*expaffine(-0.7,0:1)+0.4*expaffine(-1.2,1:0.3)
class EntryFunction {
public:
  enum class Kind { Constant, Affine, ExpAffine, NonnegCombination };

  struct Term {
    int factor = 0;
    double coef = 0.0;
  };

  static EntryFunction constant(double value);
  static EntryFunction affine(double base, std::vector<Term> terms);
  static EntryFunction exp_affine(double base, std::vector<Term> terms);
  static EntryFunction nonneg_combination(std::vector<double> weights,
                                          std::vector<EntryFunction> atoms);

  Kind kind() const { return kind_; }

  double evaluate(const Eigen::VectorXd& eps) const;

  // Largest factor index referenced, -1 when the entry ignores eps.
  int max_factor_index() const;

  // Affine entries break the log-convexity hypothesis behind the
  // variability comparison; everything else in the grammar satisfies it.
  bool hypothesis_violating() const { return kind_ == Kind::Affine; }

  // True when the entry is positive for every eps.
  bool strictly_positive() const;

  // Constant and Affine entries are linear in eps; these expose the
  // coefficients for perturbation formulas. Other kinds throw.
  double affine_base() const;
  Eigen::VectorXd affine_coefficients(int factor_dim) const;

  std::string to_string() const;
  static EntryFunction parse(const std::string& text);

  double constant_value() const { return base_; }
  double base() const { return base_; }
  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<EntryFunction>& atoms() const { return atoms_; }

private:
  EntryFunction() = default;

  Kind kind_ = Kind::Constant;
  double base_ = 0.0;
  std::vector<Term> terms_;
  std::vector<double> weights_;
  std::vector<EntryFunction> atoms_;
};

}  // namespace varorder
