#include "varorder/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "varorder/errors.hpp"
#include "varorder/numeric.hpp"

namespace varorder {

namespace {

bool is_finite(double x) { return std::isfinite(x); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms) {
  if (atoms.empty())
    throw ValidationError("InvalidDistribution", "distribution needs at least one atom");
  for (const Atom& a : atoms) {
    if (!is_finite(a.value))
      throw ValidationError("InvalidDistribution", "non-finite atom value");
    if (!(a.probability > 0.0) || a.probability > 1.0)
      throw ValidationError("InvalidDistribution",
                            "atom probability " + fmt(a.probability) + " outside (0,1]");
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.value < b.value; });

  // Merge atoms closer than kMergeTol; merged value is the
  // probability-weighted mean of the originals.
  atoms_.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && a.value - atoms_.back().value <= kMergeTol) {
      Atom& m = atoms_.back();
      const double p = m.probability + a.probability;
      m.value = (m.value * m.probability + a.value * a.probability) / p;
      m.probability = p;
    } else {
      atoms_.push_back(a);
    }
  }

  std::vector<double> probs, contribs;
  probs.reserve(atoms_.size());
  contribs.reserve(atoms_.size());
  for (const Atom& a : atoms_) {
    probs.push_back(a.probability);
    contribs.push_back(a.probability * a.value);
  }
  const double total = kahan_sum(probs);
  if (std::abs(total - 1.0) > kProbTol)
    throw ValidationError("InvalidDistribution",
                          "probabilities sum to " + fmt(total) + ", not 1");
  mean_ = kahan_sum(contribs);

  cum_.reserve(atoms_.size());
  double acc = 0.0;
  for (const Atom& a : atoms_) {
    acc += a.probability;
    cum_.push_back(acc);
  }
  cum_.back() = 1.0;
}

DiscreteDistribution DiscreteDistribution::point_mass(double value) {
  return DiscreteDistribution({{value, 1.0}});
}

DiscreteDistribution DiscreteDistribution::uniform(const std::vector<double>& values) {
  if (values.empty())
    throw ValidationError("InvalidDistribution", "uniform() needs at least one value");
  std::vector<Atom> atoms;
  atoms.reserve(values.size());
  const double p = 1.0 / static_cast<double>(values.size());
  for (double v : values) atoms.push_back({v, p});
  return DiscreteDistribution(std::move(atoms));
}

double DiscreteDistribution::variance() const {
  std::vector<double> contribs;
  contribs.reserve(atoms_.size());
  for (const Atom& a : atoms_) {
    const double d = a.value - mean_;
    contribs.push_back(a.probability * d * d);
  }
  return kahan_sum(contribs);
}

double DiscreteDistribution::sample(Rng& rng) const {
  const double u = rng.uniform01();
  const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
  return atoms_[std::min(i, atoms_.size() - 1)].value;
}

std::string DiscreteDistribution::to_csv() const {
  std::string out = "value,probability\n";
  for (const Atom& a : atoms_) {
    out += fmt(a.value);
    out += ',';
    out += fmt(a.probability);
    out += '\n';
  }
  return out;
}

DiscreteDistribution DiscreteDistribution::from_csv(const std::string& text) {
  std::vector<Atom> atoms;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped;
    for (char ch : line)
      if (ch != ' ' && ch != '\t') stripped += ch;
    if (stripped.empty()) continue;
    if (lineno == 1 && stripped == "value,probability") continue;
    const auto comma = stripped.find(',');
    if (comma == std::string::npos)
      throw ValidationError("InvalidDistribution",
                            "line " + std::to_string(lineno) + ": expected value,probability");
    try {
      std::size_t used1 = 0, used2 = 0;
      const std::string a = stripped.substr(0, comma), b = stripped.substr(comma + 1);
      const double v = std::stod(a, &used1);
      const double p = std::stod(b, &used2);
      if (used1 != a.size() || used2 != b.size()) throw std::invalid_argument("trailing");
      atoms.push_back({v, p});
    } catch (const std::logic_error&) {
      throw ValidationError("InvalidDistribution",
                            "line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return DiscreteDistribution(std::move(atoms));
}

DiscreteDistribution EmpiricalSample::to_distribution() const {
  return DiscreteDistribution::uniform(draws);
}

double EmpiricalSample::mean() const {
  if (draws.empty())
    throw ValidationError("InvalidDistribution", "empty sample has no mean");
  return pairwise_sum(draws) / static_cast<double>(draws.size());
}

double stop_loss(const DiscreteDistribution& d, double c) {
  std::vector<double> contribs;
  for (const Atom& a : d.atoms())
    if (a.value > c) contribs.push_back(a.probability * (a.value - c));
  return contribs.empty() ? 0.0 : kahan_sum(contribs);
}

double lower_stop_loss(const DiscreteDistribution& d, double c) {
  std::vector<double> contribs;
  for (const Atom& a : d.atoms())
    if (a.value < c) contribs.push_back(a.probability * (c - a.value));
  return contribs.empty() ? 0.0 : kahan_sum(contribs);
}

double cv_p(const DiscreteDistribution& d, double p) {
  if (!(p >= 1.0))
    throw ValidationError("InvalidSpec", "cv_p needs p >= 1, got " + fmt(p));
  if (!(d.min_value() > 0.0))
    throw ValidationError("NonPositiveSupport",
                          "cv_p needs strictly positive support, found value " +
                              fmt(d.min_value()));
  std::vector<double> contribs;
  contribs.reserve(d.size());
  for (const Atom& a : d.atoms())
    contribs.push_back(a.probability * std::pow(a.value, p));
  return std::pow(kahan_sum(contribs), 1.0 / p) / d.mean();
}

DiscreteDistribution convolve(const DiscreteDistribution& x,
                              const DiscreteDistribution& y) {
  std::vector<Atom> atoms;
  atoms.reserve(x.size() * y.size());
  for (const Atom& a : x.atoms())
    for (const Atom& b : y.atoms())
      atoms.push_back({a.value + b.value, a.probability * b.probability});
  return DiscreteDistribution(std::move(atoms));
}

}  // namespace varorder
