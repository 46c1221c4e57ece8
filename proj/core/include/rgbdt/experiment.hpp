#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rgbdt/booster.hpp"
#include "rgbdt/config.hpp"
#include "rgbdt/dataset.hpp"
#include "rgbdt/metrics.hpp"
#include "rgbdt/noise.hpp"

namespace rgbdt {

// Hyperparameter grid searched per (noise level, repeat) cell.
struct HyperGrid {
  std::vector<double> r = {0.5, 1.0, 2.0};
  std::vector<double> q = {0.3, 0.5, 0.7};
  std::vector<double> learning_rate = {0.05, 0.1};
  std::vector<int> n_rounds = {100, 300};
};

// A named method: a loss template plus the loss parameters it tunes. An
// empty value list means the template's value is used as is.
struct MethodSpec {
  std::string name;
  LossSpec loss;
  std::vector<double> r_values;
  std::vector<double> q_values;
};

// Known names: cce, fl, gce, rfl, mae, sce, nce, and the ablation variants
// rfl_r0 (RFL with r fixed to 0) and rfl_q0 (the q -> 0 limit, run as FL).
MethodSpec method_from_name(const std::string& name, const HyperGrid& grid, const LossSpec& base = {});
std::vector<MethodSpec> ablation_methods(const HyperGrid& grid, const LossSpec& base = {});

struct ExperimentConfig {
  std::string dataset_name = "dataset";
  std::vector<double> noise_levels = {0.0, 0.1, 0.2, 0.3, 0.4};
  int repeats = 5;
  double split_fraction = 0.8;
  bool stratified = true;
  // Share of the noisy training set used for fitting during tuning; the rest
  // scores the grid.
  double tuning_fraction = 0.75;
  std::vector<MethodSpec> methods;
  HyperGrid grid;
  // Tree settings, subsample and force_one_vs_all are taken from here; loss,
  // learning rate, rounds and seed are set per grid point.
  BoosterConfig booster;
  bool wrap_last_class = true;
  std::uint64_t master_seed = 0;
  int threads = 1;

  void validate() const;
};

struct CellResult {
  std::string dataset;
  std::string method;
  double gamma = 0.0;
  int repeat = 0;
  std::string metric;
  double value = 0.0;
  std::string params;  // selected hyperparameters
};

// Audit trail of one (noise level, repeat) cell.
struct CellAudit {
  double gamma = 0.0;
  int repeat = 0;
  std::vector<std::uint32_t> test_indices;
  std::vector<FlipRecord> flips;  // indices refer to the full dataset
  bool pure = true;               // no flip touched a test index
};

struct SweepResult {
  std::vector<CellResult> rows;  // canonical order
  std::vector<CellAudit> audits;
};

// Seeds of a cell. Method identity does not enter, so every method of a
// cell sees the same split, noise and tuning split.
std::uint64_t split_seed(std::uint64_t master, int repeat);
std::uint64_t noise_seed(std::uint64_t master, std::size_t gamma_index, int repeat);
std::uint64_t tuning_seed(std::uint64_t master, std::size_t gamma_index, int repeat);

// For every noise level and repeat: seeded split, noise on the training part
// only, grid search on an internal split of the noisy training data, refit
// on all of it, and evaluation on the clean test part.
SweepResult run_sweep(const TabularDataset& data, const ExperimentConfig& config);

// Parses experiment settings (noise_levels, repeats, split_fraction,
// stratified, tuning_fraction, methods, grid_r, grid_q, grid_learning_rate,
// grid_n_rounds, wrap_last_class, dataset_name) plus tree/booster keys.
ExperimentConfig experiment_from_config(const KeyValueConfig& cfg);

void write_results_csv(std::ostream& out, const std::vector<CellResult>& rows);
std::vector<CellResult> read_results_csv(std::istream& in);

struct SummaryRow {
  std::string dataset;
  std::string method;
  double gamma = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

std::vector<SummaryRow> summarize(const std::vector<CellResult>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_json(std::ostream& out, const std::vector<SummaryRow>& rows,
                        const ExperimentConfig& config);

// Rank report in the shape of the average-rank tables: every (dataset, noise
// level) pair is one ranking row scored by the mean over repeats; per-dataset
// ranks are averaged over noise levels.
struct RankReport {
  RankTable derived;  // one row per dataset@gamma
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> dataset_ranks;  // datasets x methods
  std::vector<double> average;                     // per method
};

RankReport make_report(const std::vector<CellResult>& rows);
void write_report_csv(std::ostream& out, const RankReport& report);

// Shortest round-trip decimal form used in every CSV this module writes.
std::string format_number(double v);

}  // namespace rgbdt
