#include "rgbdt/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rgbdt/error.hpp"
#include "rgbdt/random.hpp"

namespace rgbdt::synthetic {

namespace {

std::vector<std::string> names(std::size_t n_features) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < n_features; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

std::vector<FeatureColumn> empty_columns(std::size_t n_features, std::size_t n) {
  std::vector<FeatureColumn> cols(n_features);
  for (auto& c : cols) {
    c.values.reserve(n);
    c.missing.reserve(n);
  }
  return cols;
}

void push_row(std::vector<FeatureColumn>& cols, std::span<const double> row) {
  for (std::size_t j = 0; j < cols.size(); ++j) {
    cols[j].values.push_back(row[j]);
    cols[j].missing.push_back(0);
  }
}

std::vector<std::string> numbered_classes(int n_classes) {
  std::vector<std::string> out;
  for (int c = 0; c < n_classes; ++c) out.push_back(std::to_string(c));
  return out;
}

}  // namespace

TabularDataset separable(std::size_t n, std::uint64_t seed, double margin) {
  if (n == 0) throw ConfigError("separable: n must be positive");
  Rng rng(seed);
  auto cols = empty_columns(2, n);
  std::vector<int> labels;
  labels.reserve(n);
  while (labels.size() < n) {
    const double x0 = 2.0 * rng.uniform() - 1.0;
    const double x1 = 2.0 * rng.uniform() - 1.0;
    const double d = x0 + x1;
    if (std::abs(d) < margin) continue;
    const double row[2] = {x0, x1};
    push_row(cols, row);
    labels.push_back(d > 0.0 ? 1 : 0);
  }
  return TabularDataset(names(2), std::move(cols), std::move(labels), numbered_classes(2));
}

TabularDataset imbalanced(const ImbalancedOptions& o, std::uint64_t seed) {
  if (o.n < 2 || !(o.ratio >= 1.0) || o.n_features == 0 || o.informative > o.n_features)
    throw ConfigError("imbalanced: invalid options");
  const auto n_min = static_cast<std::size_t>(
      std::llround(static_cast<double>(o.n) / (o.ratio + 1.0)));
  if (n_min == 0 || n_min >= o.n) throw ConfigError("imbalanced: ratio leaves a class empty");
  Rng rng(seed);
  auto cols = empty_columns(o.n_features, o.n);
  std::vector<int> labels(o.n, 0);
  // Minority rows are spread evenly through the file rather than appended.
  const double stride = static_cast<double>(o.n) / static_cast<double>(n_min);
  for (std::size_t k = 0; k < n_min; ++k) {
    labels[static_cast<std::size_t>(std::floor(stride * static_cast<double>(k)))] = 1;
  }
  std::vector<double> row(o.n_features);
  for (std::size_t i = 0; i < o.n; ++i) {
    for (std::size_t j = 0; j < o.n_features; ++j) {
      const double mean = (labels[i] == 1 && j < o.informative) ? o.shift : 0.0;
      row[j] = mean + rng.normal();
    }
    push_row(cols, row);
  }
  return TabularDataset(names(o.n_features), std::move(cols), std::move(labels), numbered_classes(2));
}

TabularDataset blobs(std::size_t n, int n_classes, std::uint64_t seed, double spread) {
  if (n == 0 || n_classes < 2) throw ConfigError("blobs: need n > 0 and at least 2 classes");
  Rng rng(seed);
  auto cols = empty_columns(2, n);
  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(n_classes));
    const double angle = 2.0 * std::numbers::pi * c / n_classes;
    const double row[2] = {spread * std::cos(angle) + rng.normal(),
                           spread * std::sin(angle) + rng.normal()};
    push_row(cols, row);
    labels.push_back(c);
  }
  return TabularDataset(names(2), std::move(cols), std::move(labels), numbered_classes(n_classes));
}

}  // namespace rgbdt::synthetic
