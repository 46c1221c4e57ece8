#include "rgbdt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rgbdt/error.hpp"

namespace rgbdt {

namespace {

constexpr double kDegenerate = 1e-12;

bool usable_denominator(double sum_h, double lambda) {
  return std::abs(sum_h + lambda) >= kDegenerate;
}

// Splits between a and b (a < b) so that a <= t < b holds in floating point.
double midpoint(double a, double b) {
  double t = a / 2.0 + b / 2.0;
  if (!(t < b) || t < a) t = a;
  return t;
}

struct Totals {
  double g = 0.0;
  double h = 0.0;
  std::size_t n = 0;
};

// Samples of one open node. per_feature[j] lists the node's present samples
// of feature j in ascending value order.
struct NodeWork {
  int node = 0;
  std::vector<std::uint32_t> samples;
  std::vector<std::vector<std::uint32_t>> per_feature;
  std::optional<SplitCandidate> best;
};

Totals sum_over(std::span<const std::uint32_t> samples, std::span<const GradHessPair> gh) {
  Totals t;
  for (auto i : samples) {
    t.g += gh[i].g;
    t.h += gh[i].h;
  }
  t.n = samples.size();
  return t;
}

class SplitFinder {
 public:
  SplitFinder(const TabularDataset& data, std::span<const GradHessPair> gh, const TreeConfig& cfg)
      : data_(data), gh_(gh), cfg_(cfg) {}

  std::optional<SplitCandidate> find(const NodeWork& work, const Totals& node) const {
    std::optional<SplitCandidate> best;
    if (node.n < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf)) return best;
    for (std::size_t j = 0; j < data_.n_features(); ++j) {
      scan_feature(static_cast<int>(j), work, node, best);
    }
    return best;
  }

 private:
  void consider(SplitCandidate cand, const Totals& node,
                std::optional<SplitCandidate>& best) const {
    const auto min_n = static_cast<std::size_t>(cfg_.min_samples_leaf);
    if (cand.n_left < min_n || cand.n_right < min_n) return;
    if (cand.h_left < cfg_.min_sum_hessian || cand.h_right < cfg_.min_sum_hessian) return;
    if (!usable_denominator(cand.h_left, cfg_.lambda) ||
        !usable_denominator(cand.h_right, cfg_.lambda) || !usable_denominator(node.h, cfg_.lambda))
      return;
    cand.gain = 0.5 * (cand.g_left * cand.g_left / (cand.h_left + cfg_.lambda) +
                       cand.g_right * cand.g_right / (cand.h_right + cfg_.lambda) -
                       node.g * node.g / (node.h + cfg_.lambda));
    if (!std::isfinite(cand.gain) || cand.gain < cfg_.min_gain) return;
    if (!best || cand.gain > best->gain) best = cand;
  }

  void scan_feature(int j, const NodeWork& work, const Totals& node,
                    std::optional<SplitCandidate>& best) const {
    const auto& col = data_.column(static_cast<std::size_t>(j));
    const auto& present = work.per_feature[static_cast<std::size_t>(j)];
    if (present.size() < 2) return;

    Totals missing;
    for (auto i : work.samples) {
      if (col.is_missing(i)) {
        missing.g += gh_[i].g;
        missing.h += gh_[i].h;
        ++missing.n;
      }
    }
    const Totals all_present = sum_over(present, gh_);

    Totals left;
    for (std::size_t k = 0; k + 1 < present.size(); ++k) {
      const auto i = present[k];
      left.g += gh_[i].g;
      left.h += gh_[i].h;
      ++left.n;
      const double v = col.values[i];
      const double next = col.values[present[k + 1]];
      if (!(v < next)) continue;

      SplitCandidate cand;
      cand.feature = j;
      cand.threshold = midpoint(v, next);
      const double gr = all_present.g - left.g;
      const double hr = all_present.h - left.h;
      const std::size_t nr = all_present.n - left.n;

      cand.default_left = true;
      cand.g_left = left.g + missing.g;
      cand.h_left = left.h + missing.h;
      cand.n_left = left.n + missing.n;
      cand.g_right = gr;
      cand.h_right = hr;
      cand.n_right = nr;
      consider(cand, node, best);

      if (missing.n > 0) {
        cand.default_left = false;
        cand.g_left = left.g;
        cand.h_left = left.h;
        cand.n_left = left.n;
        cand.g_right = gr + missing.g;
        cand.h_right = hr + missing.h;
        cand.n_right = nr + missing.n;
        consider(cand, node, best);
      }
    }
  }

  const TabularDataset& data_;
  std::span<const GradHessPair> gh_;
  const TreeConfig& cfg_;
};

NodeWork root_work(const TabularDataset& data, std::span<const std::uint32_t> samples) {
  NodeWork work;
  work.samples.assign(samples.begin(), samples.end());
  std::vector<std::uint8_t> member(data.n_samples(), 0);
  for (auto i : samples) {
    if (i >= data.n_samples()) throw DataError("sample index out of range");
    if (member[i]) throw DataError("duplicate sample index in node");
    member[i] = 1;
  }
  work.per_feature.resize(data.n_features());
  for (std::size_t j = 0; j < data.n_features(); ++j) {
    auto& list = work.per_feature[j];
    for (auto i : data.sorted_present(j)) {
      if (member[i]) list.push_back(i);
    }
  }
  return work;
}

bool goes_left(const TabularDataset& data, std::uint32_t i, const SplitCandidate& s) {
  const auto& col = data.column(static_cast<std::size_t>(s.feature));
  if (col.is_missing(i)) return s.default_left;
  return col.values[i] <= s.threshold;
}

double safe_leaf_weight(double g, double h, double lambda) {
  if (!usable_denominator(h, lambda)) return 0.0;
  return -g / (h + lambda);
}

}  // namespace

void TreeConfig::validate() const {
  if (!(std::isfinite(lambda) && lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  if (!(std::isfinite(min_sum_hessian) && min_sum_hessian >= 0.0))
    throw ConfigError("min_sum_hessian must be >= 0");
  if (!(std::isfinite(min_gain) && min_gain >= 0.0)) throw ConfigError("min_gain must be >= 0");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (max_leaves < 1) throw ConfigError("max_leaves must be >= 1");
}

double leaf_weight(double sum_g, double sum_h, double lambda) {
  if (!usable_denominator(sum_h, lambda))
    throw DegenerateError("leaf denominator sum_h + lambda is zero");
  return -sum_g / (sum_h + lambda);
}

double leaf_objective(double sum_g, double sum_h, double lambda) {
  if (!usable_denominator(sum_h, lambda))
    throw DegenerateError("leaf denominator sum_h + lambda is zero");
  return -0.5 * sum_g * sum_g / (sum_h + lambda);
}

double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda) {
  const double g = g_left + g_right;
  const double h = h_left + h_right;
  if (!usable_denominator(h_left, lambda) || !usable_denominator(h_right, lambda) ||
      !usable_denominator(h, lambda))
    throw DegenerateError("split denominator is zero");
  return 0.5 * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda) -
                g * g / (h + lambda));
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw FormatError("tree has no nodes");
  std::vector<int> parents(nodes_.size(), 0);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& n = nodes_[k];
    if (n.is_leaf()) continue;
    for (int child : {n.left, n.right}) {
      if (child <= static_cast<int>(k) || child >= static_cast<int>(nodes_.size()))
        throw FormatError("node " + std::to_string(k) + " has an invalid child index");
      ++parents[static_cast<std::size_t>(child)];
    }
  }
  if (parents[0] != 0) throw FormatError("root must not have a parent");
  for (std::size_t k = 1; k < nodes_.size(); ++k) {
    if (parents[k] != 1) throw FormatError("node " + std::to_string(k) + " is not reachable exactly once");
  }
}

Tree Tree::single_leaf(double weight) {
  TreeNode leaf;
  leaf.weight = weight;
  return Tree({leaf});
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

double Tree::predict(std::span<const double> row) const {
  int k = 0;
  while (!nodes_[static_cast<std::size_t>(k)].is_leaf()) {
    const auto& n = nodes_[static_cast<std::size_t>(k)];
    const double v = row[static_cast<std::size_t>(n.feature)];
    const bool left = std::isnan(v) ? n.default_left : v <= n.threshold;
    k = left ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(k)].weight;
}

int Tree::leaf_index(const TabularDataset& data, std::size_t sample) const {
  int k = 0;
  while (!nodes_[static_cast<std::size_t>(k)].is_leaf()) {
    const auto& n = nodes_[static_cast<std::size_t>(k)];
    const auto& col = data.column(static_cast<std::size_t>(n.feature));
    const bool left = col.is_missing(sample) ? n.default_left : col.values[sample] <= n.threshold;
    k = left ? n.left : n.right;
  }
  return k;
}

double Tree::predict(const TabularDataset& data, std::size_t sample) const {
  return nodes_[static_cast<std::size_t>(leaf_index(data, sample))].weight;
}

std::optional<SplitCandidate> best_split(const TabularDataset& data,
                                         std::span<const std::uint32_t> samples,
                                         std::span<const GradHessPair> gh,
                                         const TreeConfig& config) {
  config.validate();
  if (gh.size() != data.n_samples()) throw DataError("gradient count differs from sample count");
  const NodeWork work = root_work(data, samples);
  const Totals node = sum_over(work.samples, gh);
  if (node.h < config.min_sum_hessian) return std::nullopt;
  return SplitFinder(data, gh, config).find(work, node);
}

Tree grow_tree(const TabularDataset& data, std::span<const std::uint32_t> samples,
               std::span<const GradHessPair> gh, const TreeConfig& config) {
  config.validate();
  if (samples.empty()) throw DataError("cannot grow a tree on an empty sample set");
  if (gh.size() != data.n_samples()) throw DataError("gradient count differs from sample count");

  const SplitFinder finder(data, gh, config);
  std::vector<TreeNode> nodes;
  std::vector<NodeWork> open;

  auto open_node = [&](NodeWork work, int depth) {
    const Totals t = sum_over(work.samples, gh);
    TreeNode n;
    n.sum_g = t.g;
    n.sum_h = t.h;
    n.count = t.n;
    n.depth = depth;
    n.weight = safe_leaf_weight(t.g, t.h, config.lambda);
    work.node = static_cast<int>(nodes.size());
    nodes.push_back(n);
    if (depth < config.max_depth && t.h >= config.min_sum_hessian) work.best = finder.find(work, t);
    if (work.best) open.push_back(std::move(work));
  };

  open_node(root_work(data, samples), 0);
  std::size_t leaves = 1;

  while (!open.empty() && leaves < static_cast<std::size_t>(config.max_leaves)) {
    // Highest gain first; equal gains resolve to the earlier node.
    std::size_t pick = 0;
    for (std::size_t k = 1; k < open.size(); ++k) {
      if (open[k].best->gain > open[pick].best->gain) pick = k;
    }
    NodeWork work = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
    const SplitCandidate split = *work.best;

    NodeWork left, right;
    for (auto i : work.samples) {
      (goes_left(data, i, split) ? left : right).samples.push_back(i);
    }
    left.per_feature.resize(data.n_features());
    right.per_feature.resize(data.n_features());
    for (std::size_t j = 0; j < data.n_features(); ++j) {
      for (auto i : work.per_feature[j]) {
        (goes_left(data, i, split) ? left : right).per_feature[j].push_back(i);
      }
    }
    work.per_feature.clear();
    work.samples.clear();

    const int parent = work.node;
    const int depth = nodes[static_cast<std::size_t>(parent)].depth + 1;
    {
      TreeNode& p = nodes[static_cast<std::size_t>(parent)];
      p.feature = split.feature;
      p.threshold = split.threshold;
      p.default_left = split.default_left;
      p.weight = 0.0;
    }
    const int left_id = static_cast<int>(nodes.size());
    open_node(std::move(left), depth);
    const int right_id = static_cast<int>(nodes.size());
    open_node(std::move(right), depth);
    nodes[static_cast<std::size_t>(parent)].left = left_id;
    nodes[static_cast<std::size_t>(parent)].right = right_id;
    ++leaves;
  }
  return Tree(std::move(nodes));
}

double appendix_gain(const GainScenario& s) {
  // Evaluated over the common denominator: with b = theta H, A = tau b + lambda,
  // B = (1 - tau) b + lambda and C = b + lambda the bracket equals
  //   (C b (mu - tau)^2 + lambda (tau (1 - tau) b - 2 mu (1 - mu) C)) / (A B C),
  // which avoids the cancellation of the three-term form.
  using ld = long double;
  const ld b = static_cast<ld>(s.theta) * s.H;
  const ld lam = s.lambda;
  const ld tau = s.tau;
  const ld mu = s.mu;
  const ld a_den = tau * b + lam;
  const ld b_den = (1.0L - tau) * b + lam;
  const ld c_den = b + lam;
  for (ld d : {a_den, b_den, c_den}) {
    if (std::fabs(d) < kDegenerate) throw DegenerateError("appendix gain denominator is zero");
  }
  const ld diff = mu - tau;
  const ld num = c_den * b * diff * diff + lam * (tau * (1.0L - tau) * b - 2.0L * mu * (1.0L - mu) * c_den);
  const ld g2 = static_cast<ld>(s.G) * s.G;
  return static_cast<double>(g2 * num / (a_den * b_den * c_den));
}

}  // namespace rgbdt
