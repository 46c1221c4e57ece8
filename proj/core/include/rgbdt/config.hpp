#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rgbdt/booster.hpp"
#include "rgbdt/dataset.hpp"
#include "rgbdt/loss.hpp"

namespace rgbdt {

// Plain-text key=value configuration. '#' starts a comment, blank lines are
// ignored, later keys override earlier ones. Typed getters throw ConfigError
// naming the key on malformed values; keys never read are reported by
// unused_keys() so typos surface as configuration errors.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse_string(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::int64_t> get_ints(const std::string& key,
                                     const std::vector<std::int64_t>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  std::vector<std::string> unused_keys() const;
  // Throws ConfigError listing every key that no getter consumed.
  void reject_unused() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

// family, r, q, eta, sce_alpha, sce_beta, imbalance_factor, safeguard.
LossSpec loss_spec_from_config(const KeyValueConfig& cfg);
// lambda, min_samples_leaf, min_sum_hessian, min_gain, max_depth, max_leaves.
TreeConfig tree_config_from_config(const KeyValueConfig& cfg);
// The two above plus learning_rate, n_rounds, subsample, seed,
// early_stopping_rounds, force_one_vs_all. n_classes comes from the data.
BoosterConfig booster_config_from_config(const KeyValueConfig& cfg);
// label_column, missing_tokens, delimiter.
CsvSchema csv_schema_from_config(const KeyValueConfig& cfg);

}  // namespace rgbdt
