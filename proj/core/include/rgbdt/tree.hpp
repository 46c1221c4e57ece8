#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rgbdt/dataset.hpp"
#include "rgbdt/loss.hpp"

namespace rgbdt {

struct TreeConfig {
  double lambda = 1.0;            // L2 penalty on leaf weights
  int min_samples_leaf = 20;
  double min_sum_hessian = 1e-3;  // per-child lower bound on sum of h
  double min_gain = 0.0;          // a split must reach at least this gain
  int max_depth = 6;
  int max_leaves = 31;

  void validate() const;
};

// Newton-optimal weight -G / (H + lambda). Throws DegenerateError when
// |H + lambda| < 1e-12.
double leaf_weight(double sum_g, double sum_h, double lambda);
// Optimal quadratic objective -G^2 / (2 (H + lambda)) of one leaf.
double leaf_objective(double sum_g, double sum_h, double lambda);
// Objective reduction of a split, including the factor 1/2.
double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda);

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;  // present values <= threshold go left
  double gain = 0.0;
  bool default_left = true;  // side taken by missing values
  double g_left = 0.0;
  double h_left = 0.0;
  double g_right = 0.0;
  double h_right = 0.0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double weight = 0.0;  // meaningful on leaves only
  // Training statistics of the samples that reached this node.
  double sum_g = 0.0;
  double sum_h = 0.0;
  std::size_t count = 0;
  int depth = 0;

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  // Checks that nodes form a binary tree rooted at index 0.
  explicit Tree(std::vector<TreeNode> nodes);

  static Tree single_leaf(double weight);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;
  int depth() const;

  // NaN features take the stored default direction.
  double predict(std::span<const double> row) const;
  double predict(const TabularDataset& data, std::size_t sample) const;
  int leaf_index(const TabularDataset& data, std::size_t sample) const;

 private:
  std::vector<TreeNode> nodes_;
};

// Exact greedy search over every feature, threshold (midpoints between
// consecutive distinct present values) and missing direction. Ties go to
// the lower feature index, then the lower threshold, then missing-left.
// Returns nullopt when no candidate passes the sample-count, sum-of-Hessian
// and minimum-gain rules. gh is indexed by dataset sample index.
std::optional<SplitCandidate> best_split(const TabularDataset& data,
                                         std::span<const std::uint32_t> samples,
                                         std::span<const GradHessPair> gh,
                                         const TreeConfig& config);

// Best-first growth: repeatedly splits the open leaf with the highest gain
// until no leaf admits a split, max_leaves is reached, or every splittable
// leaf sits at max_depth.
Tree grow_tree(const TabularDataset& data, std::span<const std::uint32_t> samples,
               std::span<const GradHessPair> gh, const TreeConfig& config);

// Gain of a fixed split after some Hessians turned negative, parameterised
// by the ratios G_L = mu G, H_L = nu H, H' = theta H, H'_L = tau H'. No 1/2
// factor. nu only describes the original split and does not enter.
struct GainScenario {
  double G = 1.0;
  double H = 1.0;
  double mu = 0.5;
  double nu = 0.5;
  double theta = 1.0;
  double tau = 0.5;
  double lambda = 0.0;
};

double appendix_gain(const GainScenario& s);

}  // namespace rgbdt
