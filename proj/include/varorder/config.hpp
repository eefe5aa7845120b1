#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "varorder/analysis.hpp"
#include "varorder/matrix_model.hpp"
#include "varorder/scenario.hpp"

namespace varorder {

// Flat "key = value" configuration. Keys are dotted paths, values may be
// quoted, '#' starts a full-line comment. Every key must be consumed by
// the run that uses the config; leftovers are reported as errors so typos
// cannot silently change an experiment.
class ExperimentConfig {
public:
  static ExperimentConfig parse_file(const std::filesystem::path& path);
  static ExperimentConfig parse_text(const std::string& text,
                                     const std::filesystem::path& origin = "<inline>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  long get_long(const std::string& key);
  long get_long(const std::string& key, long fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  double get_double(const std::string& key);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_doubles(const std::string& key);
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback);

  // Throws listing every key no getter touched.
  void require_all_used() const;

  // Sorted "key=value" lines; reordering the file does not change it.
  std::string canonical_text() const;
  // FNV-1a 64 over the canonical text, hex.
  std::string hash_hex() const;

  const std::filesystem::path& origin_dir() const { return dir_; }
  // Paths in config values resolve relative to the config file.
  std::filesystem::path resolve(const std::string& relative) const;

private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> used_;
  std::filesystem::path dir_;
};

// Builders from the canonical key layout (see README for the full list).
MatrixSpec model_from_config(ExperimentConfig& cfg);
NoiseSpec noise_from_config(ExperimentConfig& cfg, const std::string& prefix,
                            int factor_dim);
PopulationVector population_from_config(ExperimentConfig& cfg, int dim);
SizeFunctional size_from_config(ExperimentConfig& cfg, int dim);
CouplingSpec coupling_from_config(ExperimentConfig& cfg, int factor_dim);
DiscreteDistribution distribution_from_config(ExperimentConfig& cfg,
                                              const std::string& key);

}  // namespace varorder
