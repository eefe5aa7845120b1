#include "varorder/probes.hpp"

#include <cmath>

#include "varorder/errors.hpp"
#include "varorder/rng.hpp"

namespace varorder {

Box::Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_)
    : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size() || lo.size() < 1)
    throw ValidationError("InvalidSpec", "box bounds must share a positive dimension");
  if (!lo.allFinite() || !hi.allFinite())
    throw ValidationError("InvalidSpec", "box bounds must be finite");
  if (((hi - lo).array() < 0.0).any())
    throw ValidationError("InvalidSpec", "box upper bound below lower bound");
}

namespace {

Eigen::VectorXd draw_in_box(const Box& box, Rng& rng) {
  Eigen::VectorXd x(box.dim());
  for (int i = 0; i < box.dim(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
  return x;
}

double log_entry(const EntryFunction& entry, const Eigen::VectorXd& eps) {
  const double v = entry.evaluate(eps);
  if (!(v > 0.0))
    throw SimulationError("NonPositiveValue",
                          "entry is not positive inside the probe box");
  return std::log(v);
}

}  // namespace

ProbeResult logconvexity_probe(const EntryFunction& entry, const Box& box,
                               long trials, std::uint64_t seed, double tol) {
  if (trials < 1) throw ValidationError("InvalidSpec", "probe needs trials >= 1");
  Rng rng(seed);
  ProbeResult res;
  for (long i = 0; i < trials; ++i) {
    const Eigen::VectorXd x = draw_in_box(box, rng);
    const Eigen::VectorXd y = draw_in_box(box, rng);
    const double lambda = rng.uniform01();
    const double lhs = log_entry(entry, lambda * x + (1.0 - lambda) * y);
    const double rhs = lambda * log_entry(entry, x) + (1.0 - lambda) * log_entry(entry, y);
    ++res.trials_run;
    if (lhs > rhs + tol) {
      res.pass = false;
      res.witness = ConvexityWitness{x, y, lambda, lhs, rhs, "log_entry"};
      return res;
    }
  }
  return res;
}

namespace {

Scenario unstack(const Eigen::VectorXd& stacked, int horizon, int p) {
  Scenario sc;
  sc.factors.resize(horizon, p);
  for (int t = 0; t < horizon; ++t)
    sc.factors.row(t) = stacked.segment(static_cast<Eigen::Index>(t) * p, p).transpose();
  return sc;
}

double end_size(const MatrixSpec& spec, const PopulationVector& n0,
                const SizeFunctional& f, const Eigen::VectorXd& stacked,
                int horizon) {
  const Scenario sc = unstack(stacked, horizon, spec.factor_dim);
  const auto path = propagate(spec, n0, sc);
  SizeFunctional plain = f;
  plain.log_scale = false;
  return size(path.back(), plain);
}

}  // namespace

// The claim under test: with every entry log-convex in eps, the end-time
// size is a convex function of the stacked scenario, and so is its log.
// Entries that are merely convex (e.g. affine) still give a convex size,
// so this probe accepts them too; the log check is what the combination
// closure buys.
ProbeResult scenario_convexity_probe(const MatrixSpec& spec,
                                     const PopulationVector& n0,
                                     const SizeFunctional& f, int horizon,
                                     const Box& step_box, long trials,
                                     std::uint64_t seed, double tol) {
  if (trials < 1) throw ValidationError("InvalidSpec", "probe needs trials >= 1");
  if (horizon < 1) throw ValidationError("InvalidSpec", "probe horizon must be >= 1");
  if (step_box.dim() != spec.factor_dim)
    throw ValidationError("DimensionMismatch", "probe box does not match environment");

  const int p = spec.factor_dim;
  Eigen::VectorXd lo(static_cast<Eigen::Index>(horizon) * p);
  Eigen::VectorXd hi(static_cast<Eigen::Index>(horizon) * p);
  for (int t = 0; t < horizon; ++t) {
    lo.segment(static_cast<Eigen::Index>(t) * p, p) = step_box.lo;
    hi.segment(static_cast<Eigen::Index>(t) * p, p) = step_box.hi;
  }
  const Box stacked_box(std::move(lo), std::move(hi));

  Rng rng(seed);
  ProbeResult res;
  for (long i = 0; i < trials; ++i) {
    const Eigen::VectorXd x = draw_in_box(stacked_box, rng);
    const Eigen::VectorXd y = draw_in_box(stacked_box, rng);
    const double lambda = rng.uniform01();
    const Eigen::VectorXd mid = lambda * x + (1.0 - lambda) * y;

    const double nx = end_size(spec, n0, f, x, horizon);
    const double ny = end_size(spec, n0, f, y, horizon);
    const double nmid = end_size(spec, n0, f, mid, horizon);
    ++res.trials_run;

    const double chord = lambda * nx + (1.0 - lambda) * ny;
    if (nmid > chord + tol * std::max(1.0, std::abs(chord))) {
      res.pass = false;
      res.witness = ConvexityWitness{x, y, lambda, nmid, chord, "size"};
      return res;
    }

    if (!(nx > 0.0 && ny > 0.0 && nmid > 0.0))
      throw SimulationError("LogOfZero", "size is not positive, log undefined");
    const double log_chord = lambda * std::log(nx) + (1.0 - lambda) * std::log(ny);
    const double log_mid = std::log(nmid);
    if (log_mid > log_chord + tol * std::max(1.0, std::abs(log_chord))) {
      res.pass = false;
      res.witness = ConvexityWitness{x, y, lambda, log_mid, log_chord, "log_size"};
      return res;
    }
  }
  return res;
}

}  // namespace varorder
