#include "varorder/entry_function.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "varorder/errors.hpp"

namespace varorder {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_terms(const std::vector<EntryFunction::Term>& terms) {
  for (const auto& t : terms) {
    if (t.factor < 0)
      throw ValidationError("InvalidSpec", "negative factor index in entry");
    if (!std::isfinite(t.coef))
      throw ValidationError("InvalidSpec", "non-finite coefficient in entry");
  }
}

[[noreturn]] void parse_fail(const std::string& text, const std::string& why) {
  throw ValidationError("ConfigParseError", "bad entry '" + text + "': " + why);
}

double parse_number(const std::string& s, const std::string& ctx) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::logic_error&) {
    parse_fail(ctx, "malformed number '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

// "base[,k:coef...]" shared by affine and expaffine
void parse_affine_args(const std::string& args, const std::string& ctx,
                       double& base, std::vector<EntryFunction::Term>& terms) {
  const auto parts = split(args, ',');
  if (parts.empty() || parts[0].empty()) parse_fail(ctx, "missing base");
  base = parse_number(parts[0], ctx);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto colon = parts[i].find(':');
    if (colon == std::string::npos) parse_fail(ctx, "term needs factor:coef");
    const double idx = parse_number(parts[i].substr(0, colon), ctx);
    if (idx < 0 || idx != std::floor(idx)) parse_fail(ctx, "factor index must be a nonnegative integer");
    terms.push_back({static_cast<int>(idx), parse_number(parts[i].substr(colon + 1), ctx)});
  }
}

}  // namespace

EntryFunction EntryFunction::constant(double value) {
  if (!std::isfinite(value) || value < 0.0)
    throw ValidationError("InvalidSpec", "constant entry must be finite and >= 0, got " + fmt(value));
  EntryFunction f;
  f.kind_ = Kind::Constant;
  f.base_ = value;
  return f;
}

EntryFunction EntryFunction::affine(double base, std::vector<Term> terms) {
  if (!std::isfinite(base))
    throw ValidationError("InvalidSpec", "non-finite affine base");
  check_terms(terms);
  EntryFunction f;
  f.kind_ = Kind::Affine;
  f.base_ = base;
  f.terms_ = std::move(terms);
  return f;
}

EntryFunction EntryFunction::exp_affine(double base, std::vector<Term> terms) {
  if (!std::isfinite(base))
    throw ValidationError("InvalidSpec", "non-finite expaffine base");
  check_terms(terms);
  EntryFunction f;
  f.kind_ = Kind::ExpAffine;
  f.base_ = base;
  f.terms_ = std::move(terms);
  return f;
}

EntryFunction EntryFunction::nonneg_combination(std::vector<double> weights,
                                                std::vector<EntryFunction> atoms) {
  if (weights.empty() || weights.size() != atoms.size())
    throw ValidationError("InvalidSpec", "combination needs matching, nonempty weights and atoms");
  for (double w : weights)
    if (!std::isfinite(w) || w < 0.0)
      throw ValidationError("InvalidSpec", "combination weights must be finite and >= 0");
  for (const auto& a : atoms)
    if (a.kind() != Kind::ExpAffine)
      throw ValidationError("InvalidSpec", "combination atoms must be expaffine");
  EntryFunction f;
  f.kind_ = Kind::NonnegCombination;
  f.weights_ = std::move(weights);
  f.atoms_ = std::move(atoms);
  return f;
}

double EntryFunction::evaluate(const Eigen::VectorXd& eps) const {
  switch (kind_) {
    case Kind::Constant:
      return base_;
    case Kind::Affine:
    case Kind::ExpAffine: {
      double s = base_;
      for (const Term& t : terms_) {
        if (t.factor >= eps.size())
          throw ValidationError("DimensionMismatch",
                                "entry references factor " + std::to_string(t.factor) +
                                    " but eps has " + std::to_string(eps.size()));
        s += t.coef * eps[t.factor];
      }
      return kind_ == Kind::Affine ? s : std::exp(s);
    }
    case Kind::NonnegCombination: {
      double s = 0.0;
      for (std::size_t j = 0; j < atoms_.size(); ++j)
        s += weights_[j] * atoms_[j].evaluate(eps);
      return s;
    }
  }
  return 0.0;
}

int EntryFunction::max_factor_index() const {
  int m = -1;
  for (const Term& t : terms_) m = std::max(m, t.factor);
  for (const EntryFunction& a : atoms_) m = std::max(m, a.max_factor_index());
  return m;
}

bool EntryFunction::strictly_positive() const {
  switch (kind_) {
    case Kind::Constant: return base_ > 0.0;
    case Kind::Affine: return terms_.empty() && base_ > 0.0;
    case Kind::ExpAffine: return true;
    case Kind::NonnegCombination:
      for (double w : weights_)
        if (w > 0.0) return true;
      return false;
  }
  return false;
}

double EntryFunction::affine_base() const {
  if (kind_ != Kind::Constant && kind_ != Kind::Affine)
    throw ValidationError("UnsupportedEntryKind",
                          "entry is not linear in the environment");
  return base_;
}

Eigen::VectorXd EntryFunction::affine_coefficients(int factor_dim) const {
  if (kind_ != Kind::Constant && kind_ != Kind::Affine)
    throw ValidationError("UnsupportedEntryKind",
                          "entry is not linear in the environment");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(factor_dim);
  for (const Term& t : terms_) {
    if (t.factor >= factor_dim)
      throw ValidationError("DimensionMismatch", "factor index out of range");
    c[t.factor] += t.coef;
  }
  return c;
}

std::string EntryFunction::to_string() const {
  const auto affine_args = [this]() {
    std::string s = fmt(base_);
    for (const Term& t : terms_) s += "," + std::to_string(t.factor) + ":" + fmt(t.coef);
    return s;
  };
  switch (kind_) {
    case Kind::Constant: return "const:" + fmt(base_);
    case Kind::Affine: return "affine:" + affine_args();
    case Kind::ExpAffine: return "expaffine:" + affine_args();
    case Kind::NonnegCombination: {
      std::string s = "sum:";
      for (std::size_t j = 0; j < atoms_.size(); ++j) {
        if (j) s += "+";
        std::string inner = atoms_[j].to_string();
        inner = inner.substr(inner.find(':') + 1);
        s += fmt(weights_[j]) + "*expaffine(" + inner + ")";
      }
      return s;
    }
  }
  return {};
}

EntryFunction EntryFunction::parse(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (ch != ' ' && ch != '\t') s += ch;
  const auto colon = s.find(':');
  if (colon == std::string::npos) parse_fail(text, "missing kind prefix");
  const std::string kind = s.substr(0, colon);
  const std::string rest = s.substr(colon + 1);

  if (kind == "const") {
    return constant(parse_number(rest, text));
  }
  if (kind == "affine" || kind == "expaffine") {
    double base = 0.0;
    std::vector<Term> terms;
    parse_affine_args(rest, text, base, terms);
    return kind == "affine" ? affine(base, std::move(terms))
                            : exp_affine(base, std::move(terms));
  }
  if (kind == "sum") {
    std::vector<double> weights;
    std::vector<EntryFunction> atoms;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      const auto star = rest.find('*', pos);
      if (star == std::string::npos) parse_fail(text, "sum term needs weight*expaffine(...)");
      weights.push_back(parse_number(rest.substr(pos, star - pos), text));
      if (rest.compare(star + 1, 10, "expaffine(") != 0)
        parse_fail(text, "sum term needs weight*expaffine(...)");
      const auto open = star + 10;
      const auto close = rest.find(')', open);
      if (close == std::string::npos) parse_fail(text, "unbalanced parenthesis");
      double base = 0.0;
      std::vector<Term> terms;
      parse_affine_args(rest.substr(open + 1, close - open - 1), text, base, terms);
      atoms.push_back(exp_affine(base, std::move(terms)));
      pos = close + 1;
      if (pos < rest.size()) {
        if (rest[pos] != '+') parse_fail(text, "sum terms must be joined by '+'");
        ++pos;
        if (pos == rest.size()) parse_fail(text, "sum ends with '+'");
      }
    }
    return nonneg_combination(std::move(weights), std::move(atoms));
  }
  parse_fail(text, "unknown kind '" + kind + "'");
}

}  // namespace varorder
