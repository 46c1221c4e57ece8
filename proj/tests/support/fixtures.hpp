#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rgbdt/dataset.hpp"

namespace fixture {

// Dataset from row-major values; NaN marks a missing cell.
inline rgbdt::TabularDataset table(const std::vector<std::vector<double>>& rows, std::vector<int> labels,
                                   int n_classes = 2) {
  const std::size_t d = rows.empty() ? 0 : rows.front().size();
  std::vector<rgbdt::FeatureColumn> cols(d);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const bool missing = std::isnan(row[j]);
      cols[j].values.push_back(missing ? 0.0 : row[j]);
      cols[j].missing.push_back(missing ? 1 : 0);
    }
  }
  std::vector<std::string> names, classes;
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  for (int c = 0; c < n_classes; ++c) classes.push_back(std::to_string(c));
  return rgbdt::TabularDataset(names, std::move(cols), std::move(labels), classes);
}

inline rgbdt::TabularDataset column(const std::vector<double>& values) {
  std::vector<std::vector<double>> rows;
  for (double v : values) rows.push_back({v});
  return table(rows, std::vector<int>(values.size(), 0));
}

inline std::vector<std::uint32_t> all_indices(std::size_t n) {
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint32_t>(i);
  return out;
}

}  // namespace fixture
