#pragma once

#include <cstdint>

#include "rgbdt/dataset.hpp"

namespace rgbdt::synthetic {

// Two features uniform in [-1, 1]^2, label 1 iff x0 + x1 > 0. Points within
// `margin` of the boundary are redrawn, so the classes are separable by a
// gap and the classes are roughly balanced.
TabularDataset separable(std::size_t n, std::uint64_t seed, double margin = 0.05);

// Binary set with majority:minority = ratio (class 0 majority, class 1
// minority). Both classes are Gaussian; the minority mean is shifted along
// the first `informative` features, the remaining features are pure noise.
struct ImbalancedOptions {
  std::size_t n = 2000;
  double ratio = 20.0;
  std::size_t n_features = 6;
  std::size_t informative = 3;
  double shift = 1.6;
};
TabularDataset imbalanced(const ImbalancedOptions& options, std::uint64_t seed);

// Isotropic Gaussian blobs with centres on a circle of radius `spread`.
TabularDataset blobs(std::size_t n, int n_classes, std::uint64_t seed, double spread = 3.0);

}  // namespace rgbdt::synthetic
