#include "rgbdt/booster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rgbdt/error.hpp"
#include "rgbdt/metrics.hpp"
#include "rgbdt/random.hpp"

namespace rgbdt {

void BoosterConfig::validate() const {
  loss.validate();
  tree.validate();
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw ConfigError("learning_rate must lie in (0, 1]");
  if (n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
  if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
  if (early_stopping_rounds && *early_stopping_rounds < 1)
    throw ConfigError("early_stopping_rounds must be >= 1");
  if (positive_class < 0 || positive_class >= n_classes)
    throw ConfigError("positive_class outside [0, n_classes)");
}

std::vector<double> ScoreMatrix::column(std::size_t k) const {
  std::vector<double> out(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) out[i] = at(i, k);
  return out;
}

BoosterModel BoosterModel::truncated(std::size_t rounds) const {
  BoosterModel copy = *this;
  for (auto& list : copy.trees) {
    if (list.size() > rounds) list.resize(rounds);
  }
  return copy;
}

namespace {

// Per-sample sums of tree outputs, one column per tree list. Raw scores are
// always formed as init + learning_rate * sum so that training-time scores
// and predict_raw agree bitwise.
ScoreMatrix raw_from_sums(const BoosterModel& model, const ScoreMatrix& sums) {
  ScoreMatrix raw = sums;
  for (double& v : raw.data) v = model.init_score + model.config.learning_rate * v;
  return raw;
}

void add_tree_outputs(const std::vector<Tree>& round_trees, const TabularDataset& data,
                      ScoreMatrix& sums) {
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    for (std::size_t k = 0; k < round_trees.size(); ++k) {
      sums.data[i * sums.n_cols + k] += round_trees[k].predict(data, i);
    }
  }
}

int binary_target(int label, std::size_t list, std::size_t n_lists) {
  if (n_lists == 1) return label;
  return label == static_cast<int>(list) ? 1 : 0;
}

void check_dataset(const TabularDataset& data, const BoosterConfig& config, const char* what) {
  if (data.n_samples() == 0) throw DataError(std::string(what) + " dataset is empty");
  if (data.n_classes() < 2)
    throw DataError(std::string(what) + " dataset declares a single class");
  if (data.n_classes() != config.n_classes) {
    throw DataError(std::string(what) + " dataset has " + std::to_string(data.n_classes()) +
                    " classes but the config expects " + std::to_string(config.n_classes));
  }
}

}  // namespace

BoosterModel fit(const TabularDataset& data, const BoosterConfig& config,
                 const FitOptions& options) {
  config.validate();
  check_dataset(data, config, "training");
  if (config.early_stopping_rounds && options.validation == nullptr)
    throw ConfigError("early stopping needs a validation dataset");
  if (options.validation != nullptr) {
    check_dataset(*options.validation, config, "validation");
    if (options.validation->n_features() != data.n_features())
      throw DataError("validation dataset has a different feature count");
  }
  const Loss loss(config.loss);

  BoosterModel model;
  model.config = config;
  model.init_score = 0.0;
  model.n_features = data.n_features();
  model.feature_names = data.feature_names();
  model.class_names = data.class_names();
  const std::size_t n_lists =
      (config.n_classes == 2 && !config.force_one_vs_all) ? 1 : static_cast<std::size_t>(config.n_classes);
  model.trees.assign(n_lists, {});

  const std::size_t n = data.n_samples();
  ScoreMatrix sums{n, n_lists, std::vector<double>(n * n_lists, 0.0)};
  ScoreMatrix valid_sums;
  if (options.validation != nullptr) {
    const std::size_t nv = options.validation->n_samples();
    valid_sums = {nv, n_lists, std::vector<double>(nv * n_lists, 0.0)};
  }

  TrainingLog local_log;
  TrainingLog& log = options.log != nullptr ? *options.log : local_log;
  log = TrainingLog{};
  log.metric_name = task_metric_name(config.n_classes);
  const bool want_log = options.log != nullptr;

  Rng rng(config.seed);
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  const auto n_sub = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.subsample * static_cast<double>(n))));

  std::vector<GradHessPair> gh(n);
  std::vector<std::uint32_t> rows;
  std::optional<double> best_valid;
  int best_round = 0;

  for (int round = 1; round <= config.n_rounds; ++round) {
    if (n_sub < n) {
      rows = all;
      // Partial Fisher-Yates: the first n_sub slots become the sample.
      for (std::size_t k = 0; k < n_sub; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.below(n - k));
        std::swap(rows[k], rows[j]);
      }
      rows.resize(n_sub);
      std::sort(rows.begin(), rows.end());
    } else {
      rows = all;
    }

    // Every list in a round sees the scores frozen at the start of the round.
    const ScoreMatrix raw = raw_from_sums(model, sums);
    std::vector<Tree> round_trees;
    round_trees.reserve(n_lists);
    for (std::size_t k = 0; k < n_lists; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const int y = binary_target(data.label(i), k, n_lists);
        gh[i] = loss.grad_hess(y, raw.at(i, k));
        if (!std::isfinite(gh[i].g) || !std::isfinite(gh[i].h)) {
          throw NumericError("non-finite gradient or Hessian at sample " + std::to_string(i) +
                             " (" + describe(config.loss) + ")");
        }
      }
      round_trees.push_back(grow_tree(data, rows, gh, config.tree));
    }
    add_tree_outputs(round_trees, data, sums);
    if (options.validation != nullptr) add_tree_outputs(round_trees, *options.validation, valid_sums);
    for (std::size_t k = 0; k < n_lists; ++k) model.trees[k].push_back(std::move(round_trees[k]));

    std::optional<double> valid_metric;
    if (options.validation != nullptr) {
      const ScoreMatrix vraw = raw_from_sums(model, valid_sums);
      valid_metric = task_metric(proba_from_raw(model, vraw), options.validation->labels(),
                                 config.positive_class);
    }
    if (want_log) {
      const ScoreMatrix now = raw_from_sums(model, sums);
      RoundRecord rec;
      rec.round = round;
      rec.train_loss = training_loss(loss, now, data.labels());
      rec.train_metric = task_metric(proba_from_raw(model, now), data.labels(), config.positive_class);
      rec.valid_metric = valid_metric;
      log.rounds.push_back(rec);
    }
    if (valid_metric) {
      if (!best_valid || *valid_metric > *best_valid) {
        best_valid = valid_metric;
        best_round = round;
      } else if (config.early_stopping_rounds && round - best_round >= *config.early_stopping_rounds) {
        break;
      }
    }
  }

  if (config.early_stopping_rounds && best_round > 0) {
    model = model.truncated(static_cast<std::size_t>(best_round));
    log.best_round = best_round;
    log.best_valid_metric = best_valid;
  } else {
    log.best_round = static_cast<int>(model.n_rounds_trained());
    if (!log.rounds.empty()) log.best_valid_metric = log.rounds.back().valid_metric;
  }
  return model;
}

ScoreMatrix predict_raw(const BoosterModel& model, const FeatureMatrix& features) {
  if (features.n_cols != model.n_features) {
    throw DataError("feature count " + std::to_string(features.n_cols) +
                    " does not match the model schema (" + std::to_string(model.n_features) + ")");
  }
  const std::size_t k_lists = model.n_lists();
  ScoreMatrix sums{features.n_rows, k_lists, std::vector<double>(features.n_rows * k_lists, 0.0)};
  for (std::size_t i = 0; i < features.n_rows; ++i) {
    const auto row = features.row(i);
    for (std::size_t k = 0; k < k_lists; ++k) {
      double s = 0.0;
      for (const auto& tree : model.trees[k]) s += tree.predict(row);
      sums.data[i * k_lists + k] = s;
    }
  }
  return raw_from_sums(model, sums);
}

ScoreMatrix predict_raw(const BoosterModel& model, const TabularDataset& data) {
  if (data.n_features() != model.n_features) {
    throw DataError("feature count " + std::to_string(data.n_features()) +
                    " does not match the model schema (" + std::to_string(model.n_features) + ")");
  }
  const std::size_t k_lists = model.n_lists();
  ScoreMatrix sums{data.n_samples(), k_lists, std::vector<double>(data.n_samples() * k_lists, 0.0)};
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    for (std::size_t k = 0; k < k_lists; ++k) {
      double s = 0.0;
      for (const auto& tree : model.trees[k]) s += tree.predict(data, i);
      sums.data[i * k_lists + k] = s;
    }
  }
  return raw_from_sums(model, sums);
}

ScoreMatrix proba_from_raw(const BoosterModel& model, const ScoreMatrix& raw) {
  const std::size_t c = static_cast<std::size_t>(model.config.n_classes);
  ScoreMatrix out{raw.n_rows, c, std::vector<double>(raw.n_rows * c, 0.0)};
  for (std::size_t i = 0; i < raw.n_rows; ++i) {
    double* row = out.data.data() + i * c;
    if (raw.n_cols == 1) {
      const double p = sigmoid(raw.at(i, 0));
      row[0] = 1.0 - p;
      row[1] = p;
      continue;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      row[k] = sigmoid(raw.at(i, k));
      total += row[k];
    }
    for (std::size_t k = 0; k < c; ++k) row[k] /= total;
  }
  return out;
}

ScoreMatrix predict_proba(const BoosterModel& model, const FeatureMatrix& features) {
  return proba_from_raw(model, predict_raw(model, features));
}

ScoreMatrix predict_proba(const BoosterModel& model, const TabularDataset& data) {
  return proba_from_raw(model, predict_raw(model, data));
}

std::vector<int> predict_labels(const ScoreMatrix& proba) {
  std::vector<int> out(proba.n_rows);
  for (std::size_t i = 0; i < proba.n_rows; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < proba.n_cols; ++k) {
      if (proba.at(i, k) > proba.at(i, best)) best = k;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::string task_metric_name(int n_classes) { return n_classes == 2 ? "aucpr" : "accuracy"; }

double task_metric(const ScoreMatrix& proba, std::span<const int> labels, int positive_class) {
  if (proba.n_rows != labels.size()) throw DataError("task_metric: row count mismatch");
  if (proba.n_cols == 2) {
    std::vector<int> binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) binary[i] = labels[i] == positive_class ? 1 : 0;
    return aucpr(proba.column(static_cast<std::size_t>(positive_class)), binary);
  }
  return accuracy(predict_labels(proba), labels);
}

double training_loss(const Loss& loss, const ScoreMatrix& raw, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < raw.n_rows; ++i) {
    for (std::size_t k = 0; k < raw.n_cols; ++k) {
      const int y = binary_target(labels[i], k, raw.n_cols);
      total += loss.value(PHat::from_score(y, raw.at(i, k)));
    }
  }
  return total;
}

}  // namespace rgbdt
