#include "rgbdt/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rgbdt/error.hpp"

namespace rgbdt {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw ConfigError("config key '" + key + "': expected a number, got '" + text + "'");
  return v;
}

std::int64_t to_int(const std::string& key, const std::string& text) {
  std::int64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + text + "'");
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse(in);
}

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get_string(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get_string(key);
  return v ? to_double(key, *v) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = get_string(key);
  return v ? to_int(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get_string(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                const std::vector<double>& fallback) const {
  const auto v = get_string(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v)) out.push_back(to_double(key, item));
  return out;
}

std::vector<std::int64_t> KeyValueConfig::get_ints(const std::string& key,
                                                   const std::vector<std::int64_t>& fallback) const {
  const auto v = get_string(key);
  if (!v) return fallback;
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(*v)) out.push_back(to_int(key, item));
  return out;
}

std::vector<std::string> KeyValueConfig::get_strings(const std::string& key,
                                                     const std::vector<std::string>& fallback) const {
  const auto v = get_string(key);
  if (!v) return fallback;
  return split_list(*v);
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

void KeyValueConfig::reject_unused() const {
  const auto unused = unused_keys();
  if (unused.empty()) return;
  std::string msg = "unknown config key(s):";
  for (const auto& k : unused) msg += " " + k;
  throw ConfigError(msg);
}

LossSpec loss_spec_from_config(const KeyValueConfig& cfg) {
  LossSpec s;
  s.family = parse_loss_family(cfg.get_string("family", "rfl"));
  s.r = cfg.get_double("r", s.r);
  s.q = cfg.get_double("q", s.q);
  s.eta = cfg.get_double("eta", s.eta);
  s.sce_alpha = cfg.get_double("sce_alpha", s.sce_alpha);
  s.sce_beta = cfg.get_double("sce_beta", s.sce_beta);
  s.imbalance_factor = cfg.get_bool("imbalance_factor", s.imbalance_factor);
  s.safeguard = cfg.get_bool("safeguard", s.safeguard);
  s.validate();
  return s;
}

TreeConfig tree_config_from_config(const KeyValueConfig& cfg) {
  TreeConfig t;
  t.lambda = cfg.get_double("lambda", t.lambda);
  t.min_samples_leaf = static_cast<int>(cfg.get_int("min_samples_leaf", t.min_samples_leaf));
  t.min_sum_hessian = cfg.get_double("min_sum_hessian", t.min_sum_hessian);
  t.min_gain = cfg.get_double("min_gain", t.min_gain);
  t.max_depth = static_cast<int>(cfg.get_int("max_depth", t.max_depth));
  t.max_leaves = static_cast<int>(cfg.get_int("max_leaves", t.max_leaves));
  t.validate();
  return t;
}

BoosterConfig booster_config_from_config(const KeyValueConfig& cfg) {
  BoosterConfig b;
  b.loss = loss_spec_from_config(cfg);
  b.tree = tree_config_from_config(cfg);
  b.learning_rate = cfg.get_double("learning_rate", b.learning_rate);
  b.n_rounds = static_cast<int>(cfg.get_int("n_rounds", b.n_rounds));
  b.subsample = cfg.get_double("subsample", b.subsample);
  b.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  if (cfg.has("early_stopping_rounds"))
    b.early_stopping_rounds = static_cast<int>(cfg.get_int("early_stopping_rounds", 0));
  b.force_one_vs_all = cfg.get_bool("force_one_vs_all", false);
  // n_classes is filled in from the data; validate the rest now.
  if (!(b.learning_rate > 0.0 && b.learning_rate <= 1.0))
    throw ConfigError("learning_rate must lie in (0, 1]");
  if (b.n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
  if (!(b.subsample > 0.0 && b.subsample <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
  return b;
}

CsvSchema csv_schema_from_config(const KeyValueConfig& cfg) {
  CsvSchema s;
  s.label_column = cfg.get_string("label_column", s.label_column);
  if (cfg.has("missing_tokens")) s.missing_tokens = cfg.get_strings("missing_tokens", {});
  const std::string delim = cfg.get_string("delimiter", ",");
  if (delim == "\\t" || delim == "tab") {
    s.delimiter = '\t';
  } else if (delim.size() == 1) {
    s.delimiter = delim[0];
  } else {
    throw ConfigError("delimiter must be a single character");
  }
  return s;
}

}  // namespace rgbdt
