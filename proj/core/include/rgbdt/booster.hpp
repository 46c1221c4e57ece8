#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rgbdt/dataset.hpp"
#include "rgbdt/loss.hpp"
#include "rgbdt/tree.hpp"

namespace rgbdt {

struct BoosterConfig {
  LossSpec loss;
  TreeConfig tree;
  double learning_rate = 0.1;
  int n_rounds = 100;
  int n_classes = 2;
  std::uint64_t seed = 0;
  std::optional<int> early_stopping_rounds;
  double subsample = 1.0;
  // Train one tree list per class even when n_classes == 2.
  bool force_one_vs_all = false;
  // Class treated as positive when the binary task metric (AUCPR) is logged.
  int positive_class = 1;

  void validate() const;
};

// Row-major scores, one column per class (or per tree list for predict_raw).
struct ScoreMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> data;

  double at(std::size_t i, std::size_t k) const { return data[i * n_cols + k]; }
  std::vector<double> column(std::size_t k) const;
};

// Raw score of list k is init_score + learning_rate * sum of its trees. A
// binary model holds one list (class 1 score); a one-vs-all model holds one
// list per class.
class BoosterModel {
 public:
  BoosterConfig config;
  double init_score = 0.0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<std::vector<Tree>> trees;

  bool one_vs_all() const { return trees.size() > 1 || config.force_one_vs_all; }
  std::size_t n_lists() const { return trees.size(); }
  std::size_t n_rounds_trained() const { return trees.empty() ? 0 : trees.front().size(); }
  // Copy keeping only the first `rounds` trees of each list.
  BoosterModel truncated(std::size_t rounds) const;
};

struct RoundRecord {
  int round = 0;
  double train_loss = 0.0;
  double train_metric = 0.0;
  std::optional<double> valid_metric;
};

struct TrainingLog {
  std::string metric_name;
  std::vector<RoundRecord> rounds;
  int best_round = 0;  // rounds kept after early stopping
  std::optional<double> best_valid_metric;
};

struct FitOptions {
  const TabularDataset* validation = nullptr;
  TrainingLog* log = nullptr;
};

BoosterModel fit(const TabularDataset& data, const BoosterConfig& config,
                 const FitOptions& options = {});

ScoreMatrix predict_raw(const BoosterModel& model, const FeatureMatrix& features);
ScoreMatrix predict_raw(const BoosterModel& model, const TabularDataset& data);
// Binary: [1 - sigmoid(z), sigmoid(z)]. One-vs-all: per-class sigmoids
// divided by their sum.
ScoreMatrix predict_proba(const BoosterModel& model, const FeatureMatrix& features);
ScoreMatrix predict_proba(const BoosterModel& model, const TabularDataset& data);
ScoreMatrix proba_from_raw(const BoosterModel& model, const ScoreMatrix& raw);
// Argmax with ties resolved to the lower class index.
std::vector<int> predict_labels(const ScoreMatrix& proba);

// AUCPR of the positive class for binary tasks, accuracy otherwise.
double task_metric(const ScoreMatrix& proba, std::span<const int> labels, int positive_class);
std::string task_metric_name(int n_classes);

// Sum over samples (and over class lists for one-vs-all) of the per-sample
// loss at the given raw scores.
double training_loss(const Loss& loss, const ScoreMatrix& raw, std::span<const int> labels);

inline constexpr int kModelFormatVersion = 1;

std::string serialize(const BoosterModel& model);
BoosterModel deserialize(std::string_view document);
void save_model(const std::filesystem::path& path, const BoosterModel& model);
BoosterModel load_model(const std::filesystem::path& path);

}  // namespace rgbdt
