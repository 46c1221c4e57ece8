#pragma once

#include <limits>
#include <vector>

#include "fixtures.hpp"
#include "rgbdt/random.hpp"
#include "rgbdt/tree.hpp"

namespace fixture {

// Random node with dyadic g and h so that every sum is exact.
struct FuzzNode {
  rgbdt::TabularDataset data;
  std::vector<rgbdt::GradHessPair> gh;
};

inline FuzzNode fuzz_node(rgbdt::Rng& rng) {
  const std::size_t n = 2 + rng.below(29);
  const std::size_t d = 1 + rng.below(3);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t distinct = 1 + rng.below(7);
    const bool with_missing = rng.uniform() < 0.3;
    for (std::size_t i = 0; i < n; ++i) {
      if (with_missing && rng.uniform() < 0.2) {
        rows[i][j] = std::numeric_limits<double>::quiet_NaN();
      } else {
        rows[i][j] = 0.25 * static_cast<double>(rng.below(distinct)) - 0.5;
      }
    }
  }
  std::vector<rgbdt::GradHessPair> gh(n);
  for (auto& p : gh) {
    p.g = (static_cast<double>(rng.below(33)) - 16.0) / 8.0;
    p.h = static_cast<double>(rng.below(17)) / 16.0;
    if (rng.uniform() < 0.1) p.h = -p.h;
  }
  return {table(rows, std::vector<int>(n, 0)), std::move(gh)};
}

// Stump-only config with small, exactly representable limits.
inline rgbdt::TreeConfig fuzz_tree_config(rgbdt::Rng& rng) {
  rgbdt::TreeConfig c;
  c.lambda = static_cast<double>(rng.below(3)) / 2.0;
  c.min_samples_leaf = 1 + static_cast<int>(rng.below(3));
  c.min_sum_hessian = rng.uniform() < 0.5 ? 0.0 : 0.25;
  c.min_gain = rng.uniform() < 0.7 ? 0.0 : 0.125;
  c.max_leaves = 2;
  return c;
}

}  // namespace fixture
