#include "varorder/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "varorder/errors.hpp"
#include "varorder/io.hpp"

namespace varorder {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw ValidationError("ConfigParseError", what);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::logic_error&) {
    fail("key '" + key + "': malformed number '" + s + "'");
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::filesystem::path& path) {
  ExperimentConfig cfg = parse_text(read_text_file(path), path);
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text,
                                              const std::filesystem::path& origin) {
  ExperimentConfig cfg;
  cfg.dir_ = origin.has_parent_path() ? origin.parent_path() : ".";

  std::size_t lineno = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string raw =
        text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++lineno;

    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("line " + std::to_string(lineno) + ": empty key");
    for (char ch : key)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '_' &&
          ch != '-')
        fail("line " + std::to_string(lineno) + ": bad character in key '" + key + "'");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (value.empty()) fail("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    if (!cfg.kv_.emplace(key, value).second)
      fail("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return cfg;
}

bool ExperimentConfig::has(const std::string& key) const {
  return kv_.count(key) != 0;
}

std::string ExperimentConfig::get_string(const std::string& key) {
  const auto it = kv_.find(key);
  if (it == kv_.end()) fail("missing required key '" + key + "'");
  used_.insert(key);
  return it->second;
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& fallback) {
  if (!has(key)) return fallback;
  return get_string(key);
}

long ExperimentConfig::get_long(const std::string& key) {
  const double v = to_double(get_string(key), key);
  if (v != std::floor(v)) fail("key '" + key + "': expected an integer");
  return static_cast<long>(v);
}

long ExperimentConfig::get_long(const std::string& key, long fallback) {
  if (!has(key)) return fallback;
  return get_long(key);
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) {
  if (!has(key)) return fallback;
  const std::string s = get_string(key);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::logic_error&) {
    fail("key '" + key + "': expected an unsigned integer, got '" + s + "'");
  }
}

double ExperimentConfig::get_double(const std::string& key) {
  return to_double(get_string(key), key);
}

double ExperimentConfig::get_double(const std::string& key, double fallback) {
  if (!has(key)) return fallback;
  return get_double(key);
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string s = get_string(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  fail("key '" + key + "': expected true/false, got '" + s + "'");
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key) {
  std::vector<double> out;
  for (const std::string& part : split_csv(get_string(key)))
    out.push_back(to_double(part, key));
  return out;
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key,
                                                  const std::vector<double>& fallback) {
  if (!has(key)) return fallback;
  return get_doubles(key);
}

void ExperimentConfig::require_all_used() const {
  std::string stray;
  for (const auto& [k, v] : kv_)
    if (!used_.count(k)) stray += (stray.empty() ? "" : ", ") + k;
  if (!stray.empty()) fail("unrecognized keys: " + stray);
}

std::string ExperimentConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : kv_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::string ExperimentConfig::hash_hex() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : canonical_text()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path ExperimentConfig::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : dir_ / p;
}

MatrixSpec model_from_config(ExperimentConfig& cfg) {
  const long dim = cfg.get_long("model.dim");
  const long factors = cfg.get_long("model.factors", 1);
  if (dim < 1 || dim > 64) fail("model.dim must be in [1, 64]");
  if (factors < 1) fail("model.factors must be >= 1");
  std::vector<EntryFunction> entries;
  entries.reserve(static_cast<std::size_t>(dim * dim));
  for (long i = 1; i <= dim; ++i)
    for (long j = 1; j <= dim; ++j) {
      const std::string key =
          "model.entry." + std::to_string(i) + "." + std::to_string(j);
      // Entries absent from the config are structural zeros.
      entries.push_back(cfg.has(key) ? EntryFunction::parse(cfg.get_string(key))
                                     : EntryFunction::constant(0.0));
    }
  return MatrixSpec(static_cast<int>(dim), static_cast<int>(factors),
                    std::move(entries));
}

DiscreteDistribution distribution_from_config(ExperimentConfig& cfg,
                                              const std::string& key) {
  // "value:prob,value:prob,..."
  std::vector<Atom> atoms;
  for (const std::string& part : split_csv(cfg.get_string(key))) {
    const auto colon = part.find(':');
    if (colon == std::string::npos)
      fail("key '" + key + "': expected value:probability pairs");
    atoms.push_back({to_double(trim(part.substr(0, colon)), key),
                     to_double(trim(part.substr(colon + 1)), key)});
  }
  return DiscreteDistribution(std::move(atoms));
}

NoiseSpec noise_from_config(ExperimentConfig& cfg, const std::string& prefix,
                            int factor_dim) {
  const std::string kind = cfg.get_string(prefix + "kind", "iid_normal");
  const auto mean_vals = cfg.get_doubles(
      prefix + "mean", std::vector<double>(static_cast<std::size_t>(factor_dim), 0.0));
  if (static_cast<int>(mean_vals.size()) != factor_dim)
    fail("key '" + prefix + "mean' needs " + std::to_string(factor_dim) + " entries");
  Eigen::VectorXd mean(factor_dim);
  for (int i = 0; i < factor_dim; ++i) mean[i] = mean_vals[static_cast<std::size_t>(i)];

  const auto covariance = [&]() {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(factor_dim, factor_dim);
    if (cfg.has(prefix + "cov")) {
      const auto vals = cfg.get_doubles(prefix + "cov");
      if (static_cast<int>(vals.size()) != factor_dim * factor_dim)
        fail("key '" + prefix + "cov' needs " + std::to_string(factor_dim * factor_dim) +
             " entries, row-major");
      for (int i = 0; i < factor_dim; ++i)
        for (int j = 0; j < factor_dim; ++j)
          cov(i, j) = vals[static_cast<std::size_t>(i * factor_dim + j)];
    } else {
      const auto vals = cfg.get_doubles(prefix + "var");
      if (static_cast<int>(vals.size()) != factor_dim)
        fail("key '" + prefix + "var' needs " + std::to_string(factor_dim) + " entries");
      for (int i = 0; i < factor_dim; ++i) cov(i, i) = vals[static_cast<std::size_t>(i)];
    }
    return cov;
  };

  if (kind == "iid_normal") return NoiseSpec::iid_normal(mean, covariance());
  if (kind == "ar1_normal")
    return NoiseSpec::ar1_normal(mean, covariance(), cfg.get_double(prefix + "rho"));
  if (kind == "iid_discrete") {
    if (cfg.has(prefix + "mean"))
      fail("key '" + prefix + "mean' does not apply to iid_discrete noise");
    std::vector<DiscreteDistribution> comps;
    for (int k = 0; k < factor_dim; ++k)
      comps.push_back(
          distribution_from_config(cfg, prefix + "component." + std::to_string(k)));
    return NoiseSpec::iid_discrete(std::move(comps));
  }
  fail("key '" + prefix + "kind': unknown noise kind '" + kind + "'");
}

PopulationVector population_from_config(ExperimentConfig& cfg, int dim) {
  const auto vals = cfg.get_doubles(
      "population.n0", std::vector<double>(static_cast<std::size_t>(dim), 1.0));
  if (static_cast<int>(vals.size()) != dim)
    fail("key 'population.n0' needs " + std::to_string(dim) + " entries");
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = vals[static_cast<std::size_t>(i)];
  return PopulationVector(std::move(v));
}

SizeFunctional size_from_config(ExperimentConfig& cfg, int dim) {
  const auto vals = cfg.get_doubles(
      "size.weights", std::vector<double>(static_cast<std::size_t>(dim), 1.0));
  if (static_cast<int>(vals.size()) != dim)
    fail("key 'size.weights' needs " + std::to_string(dim) + " entries");
  Eigen::VectorXd w(dim);
  for (int i = 0; i < dim; ++i) w[i] = vals[static_cast<std::size_t>(i)];
  return SizeFunctional(std::move(w));
}

CouplingSpec coupling_from_config(ExperimentConfig& cfg, int factor_dim) {
  const std::string raw = cfg.get_string("coupling", "dilation:1.5");
  if (raw.rfind("dilation:", 0) == 0)
    return CouplingSpec::dilation(to_double(trim(raw.substr(9)), "coupling"));
  if (raw == "additive")
    return CouplingSpec::additive(
        noise_from_config(cfg, "coupling_noise.", factor_dim));
  fail("key 'coupling': expected 'dilation:<c>' or 'additive', got '" + raw + "'");
}

}  // namespace varorder
