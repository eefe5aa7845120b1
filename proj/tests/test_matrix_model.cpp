#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "varorder/errors.hpp"
#include "varorder/matrix_model.hpp"
#include "varorder/rng.hpp"

using namespace varorder;

namespace {

MatrixSpec make_spec(int dim, int factor_dim, const std::vector<std::string>& texts) {
  std::vector<EntryFunction> entries;
  for (const auto& t : texts) entries.push_back(EntryFunction::parse(t));
  return MatrixSpec(dim, factor_dim, std::move(entries));
}

Scenario constant_scenario(int horizon, int factor_dim, double value = 0.0) {
  Scenario s;
  s.factors = Eigen::MatrixXd::Constant(horizon, factor_dim, value);
  return s;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("matrix spec validation") {
  CHECK_THROWS_AS(make_spec(0, 1, {}), ValidationError);
  CHECK_THROWS_AS(make_spec(1, 0, {"const:1"}), ValidationError);
  CHECK_THROWS_AS(make_spec(2, 1, {"const:1", "const:1", "const:1"}), ValidationError);
  // entry references factor 1 but the environment has dimension 1
  CHECK_THROWS_AS(make_spec(1, 1, {"affine:0,1:1"}), ValidationError);
  CHECK_NOTHROW(make_spec(1, 2, {"affine:0,1:1"}));
}

TEST_CASE("entry lookup is row major and bounds checked") {
  const auto spec = make_spec(2, 1, {"const:1", "const:2", "const:3", "const:4"});
  CHECK(spec.entry(0, 1).constant_value() == 2.0);
  CHECK(spec.entry(1, 0).constant_value() == 3.0);
  CHECK_THROWS_AS(spec.entry(2, 0), ValidationError);
  CHECK_THROWS_AS(spec.entry(0, -1), ValidationError);
}

TEST_CASE("entry kind summaries") {
  const auto lin = make_spec(1, 1, {"affine:1,0:1"});
  CHECK(lin.has_affine_entries());
  CHECK(lin.all_linear());
  const auto exp = make_spec(1, 1, {"expaffine:0,0:1"});
  CHECK_FALSE(exp.has_affine_entries());
  CHECK_FALSE(exp.all_linear());
  const auto mixed = make_spec(2, 1, {"const:1", "expaffine:0", "affine:1", "const:0"});
  CHECK(mixed.has_affine_entries());
  CHECK_FALSE(mixed.all_linear());
}

TEST_CASE("population vector validation") {
  CHECK_NOTHROW(PopulationVector(vec2(0.0, 1.0)));
  CHECK_THROWS_AS(PopulationVector(Eigen::VectorXd()), ValidationError);
  CHECK_THROWS_AS(PopulationVector(vec2(-1.0, 2.0)), ValidationError);
  CHECK_THROWS_AS(PopulationVector(vec2(0.0, 0.0)), ValidationError);
  CHECK_THROWS_AS(PopulationVector(vec2(1.0, std::nan(""))), ValidationError);
}

TEST_CASE("size functional validation and evaluation") {
  const auto total = SizeFunctional::total(2);
  CHECK(size(vec2(1.5, 2.5), total) == 4.0);
  const SizeFunctional weighted(vec2(2.0, 0.0));
  CHECK(size(vec2(1.5, 2.5), weighted) == 3.0);
  const SizeFunctional logged(vec2(1.0, 1.0), true);
  CHECK(size(vec2(std::exp(1.0), 0.0), logged) == doctest::Approx(1.0));
  CHECK_THROWS_AS(size(vec2(0.0, 0.0), logged), SimulationError);
  CHECK_THROWS_AS(size(Eigen::VectorXd::Ones(3), total), ValidationError);
  CHECK_THROWS_AS(SizeFunctional(vec2(0.0, 0.0)), ValidationError);
  CHECK_THROWS_AS(SizeFunctional(vec2(-1.0, 1.0)), ValidationError);
}

TEST_CASE("matrix evaluation by hand") {
  const auto spec = make_spec(
      2, 2, {"affine:1,0:1", "const:2", "expaffine:0,1:1", "affine:0.5,0:-1"});
  const Eigen::MatrixXd a = evaluate_matrix(spec, vec2(0.25, std::log(2.0)));
  CHECK(a(0, 0) == 1.25);
  CHECK(a(0, 1) == 2.0);
  CHECK(a(1, 0) == doctest::Approx(2.0));
  CHECK(a(1, 1) == 0.25);

  CHECK_THROWS_AS(evaluate_matrix(spec, Eigen::VectorXd::Zero(1)), ValidationError);
  // (1,1) goes negative once eps_0 exceeds 0.5
  CHECK_THROWS_AS(evaluate_matrix(spec, vec2(1.0, 0.0)), SimulationError);
}

TEST_CASE("matrix evaluation flags overflow") {
  const auto spec = make_spec(1, 1, {"expaffine:1000"});
  CHECK_THROWS_WITH_AS(evaluate_matrix(spec, Eigen::VectorXd::Zero(1)),
                       doctest::Contains("not finite"), SimulationError);
}

TEST_CASE("propagation by hand") {
  const auto spec = make_spec(2, 1, {"const:1", "const:2", "const:0.5", "const:0.25"});
  const PopulationVector n0(vec2(1.0, 1.0));
  const auto path = propagate(spec, n0, constant_scenario(2, 1));
  REQUIRE(path.size() == 3);
  CHECK(path[0].isApprox(vec2(1.0, 1.0), 0.0));
  CHECK(path[1].isApprox(vec2(3.0, 0.75), 0.0));
  CHECK(path[2].isApprox(vec2(4.5, 1.6875), 0.0));
}

TEST_CASE("propagation checks dimensions") {
  const auto spec = make_spec(2, 1, {"const:1", "const:2", "const:0.5", "const:0.25"});
  CHECK_THROWS_AS(propagate(spec, PopulationVector(Eigen::VectorXd::Ones(3)),
                            constant_scenario(1, 1)),
                  ValidationError);
  CHECK_THROWS_AS(propagate(spec, PopulationVector(vec2(1, 1)), constant_scenario(1, 2)),
                  ValidationError);
}

TEST_CASE("plain propagation overflows where the log version survives") {
  const auto spec = make_spec(1, 1, {"const:1e300"});
  const PopulationVector n0(Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(propagate(spec, n0, constant_scenario(2, 1)), SimulationError);

  const auto traj =
      propagate_log(spec, n0, constant_scenario(2, 1), SizeFunctional::total(1));
  CHECK(traj.log_norm[2] == doctest::Approx(2.0 * std::log(1e300)));
}

TEST_CASE("log propagation matches plain arithmetic on a stable model") {
  const auto spec = make_spec(
      2, 2,
      {"expaffine:-0.2,0:1", "expaffine:-1,1:0.5", "expaffine:-0.5,0:0.3,1:0.2",
       "const:0.4"});
  const PopulationVector n0(vec2(0.5, 1.5));

  Rng rng(7);
  Scenario sc;
  sc.factors.resize(6, 2);
  for (int t = 0; t < 6; ++t)
    for (int k = 0; k < 2; ++k) sc.factors(t, k) = 0.5 * rng.normal();

  const SizeFunctional f(vec2(1.0, 2.0));
  const auto plain = propagate(spec, n0, sc);
  const auto traj = propagate_log(spec, n0, sc, f);

  REQUIRE(traj.log_size.size() == 7);
  REQUIRE(traj.log_norm.size() == 7);
  for (int t = 0; t <= 6; ++t) {
    CHECK(traj.log_size[t] ==
          doctest::Approx(std::log(f.weights.dot(plain[t]))).epsilon(1e-12));
    CHECK(traj.log_norm[t] ==
          doctest::Approx(std::log(plain[t].sum())).epsilon(1e-12));
  }
  const Eigen::VectorXd dir = plain[6] / plain[6].sum();
  CHECK(traj.final_direction(0) == doctest::Approx(dir(0)).epsilon(1e-12));
  CHECK(traj.final_direction(1) == doctest::Approx(dir(1)).epsilon(1e-12));
}

TEST_CASE("log propagation reports extinction and unobservable sizes") {
  const auto dying = make_spec(1, 1, {"const:0"});
  CHECK_THROWS_WITH_AS(propagate_log(dying, PopulationVector(Eigen::VectorXd::Ones(1)),
                                     constant_scenario(1, 1), SizeFunctional::total(1)),
                       doctest::Contains("hit zero"), SimulationError);

  // population survives in stage one but the functional only watches stage two
  const auto spec = make_spec(2, 1, {"const:1", "const:1", "const:0", "const:0"});
  const SizeFunctional second(vec2(0.0, 1.0));
  CHECK_THROWS_WITH_AS(propagate_log(spec, PopulationVector(vec2(1.0, 1.0)),
                                     constant_scenario(1, 1), second),
                       doctest::Contains("log undefined"), SimulationError);
}

TEST_CASE("primitivity of small patterns") {
  const auto mat = [](int n, std::initializer_list<double> vals) {
    Eigen::MatrixXd m(n, n);
    int k = 0;
    for (double v : vals) m(k / n, k % n) = v, ++k;
    return m;
  };

  CHECK(is_primitive(mat(1, {1.0})));
  CHECK_FALSE(is_primitive(mat(1, {0.0})));
  // pure swap: irreducible but periodic
  CHECK_FALSE(is_primitive(mat(2, {0, 1, 1, 0})));
  CHECK(is_primitive(mat(2, {1, 1, 1, 0})));
  // three-cycle: periodic
  CHECK_FALSE(is_primitive(mat(3, {0, 1, 0, 0, 0, 1, 1, 0, 0})));
  // cycles of length 2 and 3 share a node: aperiodic
  CHECK(is_primitive(mat(3, {0, 1, 1, 1, 0, 0, 0, 1, 0})));
  // reducible: no path back into the first stage
  CHECK_FALSE(is_primitive(mat(2, {0, 1, 0, 1})));
}

TEST_CASE("primitivity input validation") {
  CHECK_THROWS_AS(is_primitive(Eigen::MatrixXd::Ones(2, 3)), ValidationError);
  Eigen::MatrixXd neg = Eigen::MatrixXd::Ones(2, 2);
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(is_primitive(neg), ValidationError);
  CHECK_THROWS_AS(is_primitive(Eigen::MatrixXd::Ones(65, 65)), ValidationError);
  CHECK(is_primitive(Eigen::MatrixXd::Ones(64, 64)));
}
