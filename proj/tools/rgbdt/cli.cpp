#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "rgbdt/booster.hpp"
#include "rgbdt/config.hpp"
#include "rgbdt/dataset.hpp"
#include "rgbdt/error.hpp"
#include "rgbdt/experiment.hpp"
#include "rgbdt/loss.hpp"
#include "rgbdt/metrics.hpp"
#include "rgbdt/noise.hpp"
#include "rgbdt/synthetic.hpp"

namespace rgbdt::cli {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config;
  std::string out = ".";
  std::string data;
  std::optional<std::int64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key=value configuration file");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--data", f.data, "input CSV (overrides the 'data' key)");
  cmd->add_option("--seed", f.seed, "master seed (overrides the 'seed' key)");
  cmd->add_option("--threads", f.threads, "worker threads (overrides the 'threads' key)")
      ->check(CLI::PositiveNumber);
}

KeyValueConfig load_config(const CommonFlags& f) {
  KeyValueConfig cfg = f.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(f.config);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (f.threads) cfg.set("threads", std::to_string(*f.threads));
  if (!f.data.empty()) cfg.set("data", f.data);
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.precision(17);
  return out;
}

bool is_synthetic(const KeyValueConfig& cfg) { return !cfg.has("data") && cfg.has("synthetic"); }

TabularDataset load_dataset(const KeyValueConfig& cfg) {
  const CsvSchema schema = csv_schema_from_config(cfg);
  if (const auto path = cfg.get_string("data")) return load_csv(*path, schema);
  const auto kind = cfg.get_string("synthetic");
  if (!kind) throw ConfigError("config needs 'data' (CSV path) or 'synthetic' (separable, imbalanced, blobs)");
  const std::int64_t n = cfg.get_int("synthetic_n", 0);
  if (n < 0) throw ConfigError("synthetic_n must be positive");
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("synthetic_seed", 0));
  const auto size = static_cast<std::size_t>(n);
  if (*kind == "separable") {
    return synthetic::separable(size ? size : 1000, seed, cfg.get_double("synthetic_margin", 0.05));
  }
  if (*kind == "imbalanced") {
    synthetic::ImbalancedOptions o;
    if (size) o.n = size;
    o.ratio = cfg.get_double("synthetic_ratio", o.ratio);
    o.n_features = static_cast<std::size_t>(cfg.get_int("synthetic_features", static_cast<std::int64_t>(o.n_features)));
    o.informative =
        static_cast<std::size_t>(cfg.get_int("synthetic_informative", static_cast<std::int64_t>(o.informative)));
    o.shift = cfg.get_double("synthetic_shift", o.shift);
    return synthetic::imbalanced(o, seed);
  }
  if (*kind == "blobs") {
    const auto classes = static_cast<int>(cfg.get_int("synthetic_classes", 3));
    return synthetic::blobs(size ? size : 900, classes, seed, cfg.get_double("synthetic_spread", 3.0));
  }
  throw ConfigError("unknown synthetic dataset '" + *kind + "'");
}

std::string dataset_label(const KeyValueConfig& cfg) {
  if (const auto path = cfg.get_string("data")) return fs::path(*path).stem().string();
  return cfg.get_string("synthetic", "dataset");
}

int class_index(const std::vector<std::string>& classes, const std::string& name) {
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c] == name) return static_cast<int>(c);
  }
  throw ConfigError("unknown class '" + name + "'");
}

// Re-encodes labels so that class indices follow `classes` (CSV encoding
// follows first appearance, which need not match a model's order).
TabularDataset align_classes(const TabularDataset& data, const std::vector<std::string>& classes) {
  if (data.class_names() == classes) return data;
  std::vector<int> remap;
  for (const auto& name : data.class_names()) {
    bool found = false;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      if (classes[c] == name) {
        remap.push_back(static_cast<int>(c));
        found = true;
      }
    }
    if (!found) throw DataError("label '" + name + "' is not a class of the model");
  }
  std::vector<FeatureColumn> cols;
  for (std::size_t j = 0; j < data.n_features(); ++j) cols.push_back(data.column(j));
  std::vector<int> labels;
  for (int y : data.labels()) labels.push_back(remap[static_cast<std::size_t>(y)]);
  return TabularDataset(data.feature_names(), std::move(cols), std::move(labels), classes);
}

int cmd_train(const CommonFlags& f, std::ostream& out) {
  const KeyValueConfig cfg = load_config(f);
  const TabularDataset data = load_dataset(cfg);
  const bool synthetic_input = is_synthetic(cfg);
  BoosterConfig bc = booster_config_from_config(cfg);
  bc.n_classes = data.n_classes();
  if (bc.n_classes < 2) throw DataError("training data has a single class");
  const auto positive = cfg.get_string("positive_class");
  bc.positive_class = positive ? class_index(data.class_names(), *positive)
                               : minority_class(data.labels(), data.n_classes());
  std::optional<TabularDataset> validation;
  if (const auto vpath = cfg.get_string("validation_data")) {
    validation = align_classes(load_csv(*vpath, csv_schema_from_config(cfg)), data.class_names());
  }
  cfg.reject_unused();
  bc.validate();
  if (bc.early_stopping_rounds && !validation)
    throw ConfigError("early_stopping_rounds needs validation_data");

  TrainingLog log;
  FitOptions options;
  options.log = &log;
  options.validation = validation ? &*validation : nullptr;
  const BoosterModel model = fit(data, bc, options);

  const fs::path dir(f.out);
  fs::create_directories(dir);
  save_model(dir / "model.json", model);
  {
    auto csv = open_out(dir / "training_log.csv");
    csv << "round,train_loss,train_" << log.metric_name;
    if (validation) csv << ",valid_" << log.metric_name;
    csv << '\n';
    for (const auto& r : log.rounds) {
      csv << r.round << ',' << format_number(r.train_loss) << ',' << format_number(r.train_metric);
      if (validation) csv << ',' << (r.valid_metric ? format_number(*r.valid_metric) : "");
      csv << '\n';
    }
  }
  if (synthetic_input) save_csv(dir / "train_data.csv", data);

  out << "trained " << model.n_rounds_trained() << " rounds on " << data.n_samples() << " samples ("
      << to_string(bc.loss.family) << ")\n";
  if (!log.rounds.empty())
    out << "final train " << log.metric_name << ": " << format_number(log.rounds.back().train_metric) << '\n';
  out << "model: " << (dir / "model.json").string() << '\n';
  return kExitOk;
}

int cmd_predict(const CommonFlags& f, const std::string& model_path, std::ostream& out) {
  const KeyValueConfig cfg = load_config(f);
  const BoosterModel model = load_model(model_path);
  const TabularDataset raw = load_dataset(cfg);
  cfg.reject_unused();
  const TabularDataset data = align_classes(raw, model.class_names);
  const ScoreMatrix proba = predict_proba(model, data);
  const std::vector<int> predicted = predict_labels(proba);

  const fs::path dir(f.out);
  fs::create_directories(dir);
  {
    auto csv = open_out(dir / "predictions.csv");
    for (const auto& name : model.class_names) csv << "p_" << name << ',';
    csv << "predicted\n";
    for (std::size_t i = 0; i < proba.n_rows; ++i) {
      for (std::size_t k = 0; k < proba.n_cols; ++k) csv << format_number(proba.at(i, k)) << ',';
      csv << model.class_names[static_cast<std::size_t>(predicted[i])] << '\n';
    }
  }
  const int n_classes = static_cast<int>(model.class_names.size());
  const std::string name = task_metric_name(n_classes);
  const double metric = task_metric(proba, data.labels(), model.config.positive_class);
  {
    auto csv = open_out(dir / "predict_metric.csv");
    csv << "metric,value\n" << name << ',' << format_number(metric) << '\n';
  }
  out << name << ": " << format_number(metric) << '\n';
  return kExitOk;
}

int cmd_inject(const CommonFlags& f, std::ostream& out) {
  const KeyValueConfig cfg = load_config(f);
  const TabularDataset data = load_dataset(cfg);
  NoiseSpec spec;
  spec.rate = cfg.get_double("rate", 0.0);
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  spec.wrap_last_class = cfg.get_bool("wrap_last_class", true);
  const std::string protocol = cfg.get_string("protocol", data.n_classes() == 2 ? "binary" : "multiclass");
  if (protocol == "binary") {
    spec.protocol = NoiseProtocol::kBinaryPairflip;
  } else if (protocol == "multiclass") {
    spec.protocol = NoiseProtocol::kMulticlassPairflip;
  } else {
    throw ConfigError("protocol must be 'binary' or 'multiclass'");
  }
  cfg.reject_unused();
  spec.validate();

  const NoiseResult noise = inject(data.labels(), data.n_classes(), spec);
  const fs::path dir(f.out);
  fs::create_directories(dir);
  save_csv(dir / "noisy.csv", data.with_labels(noise.labels));
  {
    auto csv = open_out(dir / "flip_log.csv");
    write_flip_log(csv, noise.log);
  }
  out << "flipped " << noise.log.size() << " of " << data.n_samples() << " labels\n";
  return kExitOk;
}

std::string cell_tag(const CellAudit& a) {
  return "gamma" + format_number(a.gamma) + "_repeat" + std::to_string(a.repeat);
}

int cmd_sweep(const CommonFlags& f, bool ablation, std::ostream& out) {
  KeyValueConfig cfg = load_config(f);
  if (ablation) cfg.set("methods", "rfl,rfl_r0,rfl_q0");
  const TabularDataset data = load_dataset(cfg);
  if (!cfg.has("dataset_name")) cfg.set("dataset_name", dataset_label(cfg));
  const ExperimentConfig exp = experiment_from_config(cfg);
  cfg.reject_unused();

  const SweepResult result = run_sweep(data, exp);
  for (const auto& audit : result.audits) {
    if (!audit.pure) throw NumericError("flip log intersects the test indices in cell " + cell_tag(audit));
  }

  const fs::path dir(f.out);
  fs::create_directories(dir);
  {
    auto csv = open_out(dir / (ablation ? "ablation.csv" : "results.csv"));
    write_results_csv(csv, result.rows);
  }
  const auto summary = summarize(result.rows);
  {
    auto csv = open_out(dir / "summary.csv");
    write_summary_csv(csv, summary);
  }
  {
    auto json = open_out(dir / "summary.json");
    write_summary_json(json, summary, exp);
  }
  for (const auto& audit : result.audits) {
    auto csv = open_out(dir / "flips" / ("flip_log_" + cell_tag(audit) + ".csv"));
    write_flip_log(csv, audit.flips);
  }

  write_summary_csv(out, summary);
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir, std::ostream& out) {
  std::vector<CellResult> rows;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    auto part = read_results_csv(in);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const RankReport report = make_report(rows);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    auto csv = open_out(dir / "ranks.csv");
    write_report_csv(csv, report);
  }
  {
    auto csv = open_out(dir / "rank_rows.csv");
    write_rank_table_csv(csv, report.derived);
  }
  {
    auto csv = open_out(dir / "topn.csv");
    write_top_n_csv(csv, report.derived);
  }
  write_report_csv(out, report);
  return kExitOk;
}

int cmd_check(const CommonFlags& f, int grid, std::ostream& out) {
  const KeyValueConfig cfg = load_config(f);
  const LossSpec spec = loss_spec_from_config(cfg);
  cfg.reject_unused();
  const ConditionReport report = check_necessary_condition(spec, grid);
  out << describe(spec) << ": " << (report.holds ? "holds" : "violated") << '\n';
  const std::size_t shown = std::min<std::size_t>(report.violations.size(), 10);
  for (std::size_t k = 0; k < shown; ++k) {
    out << "  p=" << format_number(report.violations[k].phat)
        << " h=" << format_number(report.violations[k].h) << '\n';
  }
  if (report.violations.size() > shown) out << "  ... " << report.violations.size() - shown << " more\n";
  return kExitOk;
}

int cmd_generate(const CommonFlags& f, std::ostream& out) {
  const KeyValueConfig cfg = load_config(f);
  const TabularDataset data = load_dataset(cfg);
  const std::string name = cfg.get_string("synthetic", "dataset");
  cfg.reject_unused();
  const fs::path path = fs::path(f.out) / (name + ".csv");
  fs::create_directories(f.out);
  save_csv(path, data);
  out << "wrote " << data.n_samples() << " rows to " << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust-loss gradient boosting: train, predict, inject noise, sweep and report", "rgbdt"};
  app.require_subcommand(1);

  CommonFlags train_f, predict_f, inject_f, sweep_f, ablate_f, check_f, gen_f;
  std::string model_path;
  std::vector<std::string> report_inputs;
  std::string report_out = ".";
  int check_grid = 10000;

  auto* train = app.add_subcommand("train", "fit a model and write model.json and training_log.csv");
  add_common(train, train_f);
  auto* predict = app.add_subcommand("predict", "score a CSV with a saved model");
  add_common(predict, predict_f);
  predict->add_option("--model", model_path, "model.json written by train")->required();
  auto* inject_cmd = app.add_subcommand("inject", "flip labels of a dataset and write the flip log");
  add_common(inject_cmd, inject_f);
  auto* sweep = app.add_subcommand("sweep", "noise-level sweep with per-cell tuning");
  add_common(sweep, sweep_f);
  auto* ablate = app.add_subcommand("ablate", "sweep of RFL against its r=0 and q->0 variants");
  add_common(ablate, ablate_f);
  auto* report = app.add_subcommand("report", "average-rank and top-n tables from sweep CSVs");
  report->add_option("results", report_inputs, "results CSV files")->required();
  report->add_option("--out", report_out, "output directory");
  auto* check = app.add_subcommand("check", "Hessian positivity check of a loss over p in [0.5, 1)");
  add_common(check, check_f);
  check->add_option("--grid", check_grid, "grid size")->check(CLI::PositiveNumber);
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  add_common(generate, gen_f);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_f, out);
    if (predict->parsed()) return cmd_predict(predict_f, model_path, out);
    if (inject_cmd->parsed()) return cmd_inject(inject_f, out);
    if (sweep->parsed()) return cmd_sweep(sweep_f, false, out);
    if (ablate->parsed()) return cmd_sweep(ablate_f, true, out);
    if (report->parsed()) return cmd_report(report_inputs, report_out, out);
    if (check->parsed()) return cmd_check(check_f, check_grid, out);
    if (generate->parsed()) return cmd_generate(gen_f, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace rgbdt::cli
