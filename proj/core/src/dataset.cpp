#include "rgbdt/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "rgbdt/error.hpp"
#include "rgbdt/random.hpp"

namespace rgbdt {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", row, fields.size() + 1);
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

void append_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

TabularDataset::TabularDataset(std::vector<std::string> feature_names,
                               std::vector<FeatureColumn> columns, std::vector<int> labels,
                               std::vector<std::string> class_names)
    : feature_names_(std::move(feature_names)),
      columns_(std::move(columns)),
      labels_(std::move(labels)),
      class_names_(std::move(class_names)) {
  if (feature_names_.size() != columns_.size())
    throw DataError("feature name count does not match column count");
  const std::size_t n = labels_.size();
  const int c = n_classes();
  for (int y : labels_) {
    if (y < 0 || y >= c) throw DataError("label outside [0, n_classes)");
  }
  sorted_.resize(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    FeatureColumn& col = columns_[j];
    if (col.values.size() != n || col.missing.size() != n)
      throw DataError("column '" + feature_names_[j] + "' length differs from label count");
    auto& order = sorted_[j];
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (col.missing[i]) {
        col.values[i] = 0.0;
      } else {
        if (std::isnan(col.values[i])) throw DataError("NaN stored as a present value");
        order.push_back(static_cast<std::uint32_t>(i));
      }
    }
    std::stable_sort(order.begin(), order.end(), [&col](std::uint32_t a, std::uint32_t b) {
      return col.values[a] < col.values[b];
    });
  }
}

std::size_t TabularDataset::missing_count() const {
  std::size_t total = 0;
  for (const auto& col : columns_) total += std::count(col.missing.begin(), col.missing.end(), 1);
  return total;
}

std::vector<std::size_t> TabularDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names_.size(), 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

TabularDataset TabularDataset::subset(std::span<const std::uint32_t> indices) const {
  std::vector<FeatureColumn> cols(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    cols[j].values.reserve(indices.size());
    cols[j].missing.reserve(indices.size());
    for (auto i : indices) {
      cols[j].values.push_back(columns_[j].values.at(i));
      cols[j].missing.push_back(columns_[j].missing[i]);
    }
  }
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (auto i : indices) labels.push_back(labels_.at(i));
  return TabularDataset(feature_names_, std::move(cols), std::move(labels), class_names_);
}

TabularDataset TabularDataset::with_labels(std::vector<int> labels) const {
  if (labels.size() != labels_.size()) throw DataError("replacement labels have the wrong length");
  return TabularDataset(feature_names_, columns_, std::move(labels), class_names_);
}

FeatureMatrix TabularDataset::to_matrix() const {
  FeatureMatrix m;
  m.n_rows = n_samples();
  m.n_cols = n_features();
  m.data.resize(m.n_rows * m.n_cols);
  for (std::size_t j = 0; j < m.n_cols; ++j) {
    const auto& col = columns_[j];
    for (std::size_t i = 0; i < m.n_rows; ++i) {
      m.data[i * m.n_cols + j] =
          col.missing[i] ? std::numeric_limits<double>::quiet_NaN() : col.values[i];
    }
  }
  return m;
}

TabularDataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input, expected a header row", 1, 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // Strip a UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  std::vector<std::string> header = split_line(line, schema.delimiter, 1);
  for (auto& h : header) h = trim(h);

  const auto label_it = std::find(header.begin(), header.end(), schema.label_column);
  if (label_it == header.end())
    throw DataError("label column '" + schema.label_column + "' not found in header");
  const std::size_t label_pos = static_cast<std::size_t>(label_it - header.begin());

  std::vector<std::string> names;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k != label_pos) names.push_back(header[k]);
  }
  std::vector<FeatureColumn> cols(names.size());
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::map<std::string, int> class_index;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line, schema.delimiter, row);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row, std::min(fields.size(), header.size()) + 1);
    }
    std::size_t j = 0;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const std::string cell = trim(fields[k]);
      if (k == label_pos) {
        if (cell.empty()) throw ParseError("empty label", row, k + 1);
        auto [it, inserted] = class_index.emplace(cell, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(cell);
        labels.push_back(it->second);
        continue;
      }
      FeatureColumn& col = cols[j++];
      if (std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), cell) !=
          schema.missing_tokens.end()) {
        col.values.push_back(0.0);
        col.missing.push_back(1);
        continue;
      }
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last || std::isnan(v)) {
        throw ParseError("non-numeric feature value '" + cell + "' in column '" + header[k] + "'",
                         row, k + 1);
      }
      col.values.push_back(v);
      col.missing.push_back(0);
    }
  }
  return TabularDataset(std::move(names), std::move(cols), std::move(labels),
                        std::move(class_names));
}

TabularDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const TabularDataset& data, char delimiter,
               const std::string& label_column) {
  std::string line;
  for (const auto& name : data.feature_names()) {
    line += name;
    line.push_back(delimiter);
  }
  line += label_column;
  out << line << '\n';
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < data.n_features(); ++j) {
      const auto& col = data.column(j);
      if (col.is_missing(i)) {
        line += kCanonicalMissing;
      } else {
        append_double(line, col.values[i]);
      }
      line.push_back(delimiter);
    }
    line += data.class_names()[static_cast<std::size_t>(data.label(i))];
    out << line << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const TabularDataset& data, char delimiter,
              const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_csv(out, data, delimiter, label_column);
}

SplitPlan train_test_split(std::span<const int> labels, int n_classes, double fraction,
                           std::uint64_t seed, bool stratified) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  const std::size_t n = labels.size();
  if (n == 0) throw DataError("cannot split an empty dataset");
  Rng rng(seed);
  SplitPlan plan;
  plan.fraction = fraction;
  plan.seed = seed;
  plan.stratified = stratified;
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

  if (!stratified) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(std::span(order));
    plan.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    plan.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  } else {
    std::vector<std::vector<std::uint32_t>> by_class(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < n; ++i) {
      const int y = labels[i];
      if (y < 0 || y >= n_classes) throw DataError("label outside [0, n_classes)");
      by_class[static_cast<std::size_t>(y)].push_back(static_cast<std::uint32_t>(i));
    }
    // Largest-remainder allocation of n_train across classes.
    std::vector<std::size_t> take(by_class.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t allocated = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      const std::size_t size = by_class[c].size();
      if (size == 0) continue;
      if (size < 2)
        throw DataError("class " + std::to_string(c) + " has fewer than 2 samples; cannot stratify");
      const double share = fraction * static_cast<double>(size);
      take[c] = static_cast<std::size_t>(std::floor(share));
      allocated += take[c];
      remainders.emplace_back(share - std::floor(share), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; allocated < n_train && k < remainders.size(); ++k) {
      ++take[remainders[k].second];
      ++allocated;
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& members = by_class[c];
      rng.shuffle(std::span(members));
      plan.train_indices.insert(plan.train_indices.end(), members.begin(),
                                members.begin() + static_cast<std::ptrdiff_t>(take[c]));
      plan.test_indices.insert(plan.test_indices.end(),
                               members.begin() + static_cast<std::ptrdiff_t>(take[c]),
                               members.end());
    }
  }
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

SplitPlan train_test_split(const TabularDataset& data, double fraction, std::uint64_t seed,
                           bool stratified) {
  return train_test_split(data.labels(), data.n_classes(), fraction, seed, stratified);
}

namespace {

std::vector<std::size_t> count_classes(std::span<const int> labels, int n_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(n_classes, 0)), 0);
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw DataError("label outside [0, n_classes)");
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

}  // namespace

double imbalance_ratio(std::span<const int> labels, int n_classes) {
  const auto counts = count_classes(labels, n_classes);
  std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0, present = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    ++present;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  if (present < 2) throw DataError("imbalance ratio needs at least two classes present");
  return static_cast<double>(hi) / static_cast<double>(lo);
}

double imbalance_ratio(const TabularDataset& data) {
  return imbalance_ratio(data.labels(), data.n_classes());
}

int minority_class(std::span<const int> labels, int n_classes) {
  const auto counts = count_classes(labels, n_classes);
  int best = -1;
  for (int c = 0; c < n_classes; ++c) {
    const auto k = counts[static_cast<std::size_t>(c)];
    if (k == 0) continue;
    if (best < 0 || k < counts[static_cast<std::size_t>(best)]) best = c;
  }
  if (best < 0) throw DataError("no labels");
  return best;
}

}  // namespace rgbdt
