#include "rgbdt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "rgbdt/error.hpp"
#include "rgbdt/random.hpp"

namespace rgbdt {

namespace {

enum SeedStream : std::uint64_t { kSplitStream = 1, kNoiseStream = 2, kTuningStream = 3 };

struct GridPoint {
  double r = 0.0;
  double q = 0.0;
  double learning_rate = 0.0;
  int n_rounds = 0;
};

std::string describe_point(const MethodSpec& method, const GridPoint& p) {
  std::string out;
  if (!method.r_values.empty()) out += "r=" + format_number(p.r) + ";";
  if (!method.q_values.empty()) out += "q=" + format_number(p.q) + ";";
  out += "learning_rate=" + format_number(p.learning_rate) + ";n_rounds=" + std::to_string(p.n_rounds);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& text, std::size_t row) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError("expected a number, got '" + text + "'", row, 0);
  return v;
}

// Fits one method on a cell: grid search on (fit_set, val_set), refit on
// train, score on test.
CellResult run_method(const MethodSpec& method, const ExperimentConfig& cfg,
                      const TabularDataset& fit_set, const TabularDataset& val_set,
                      const TabularDataset& train, const TabularDataset& test, int positive,
                      std::uint64_t seed) {
  const std::vector<double> rs = method.r_values.empty() ? std::vector<double>{method.loss.r} : method.r_values;
  const std::vector<double> qs = method.q_values.empty() ? std::vector<double>{method.loss.q} : method.q_values;
  const int max_rounds = *std::max_element(cfg.grid.n_rounds.begin(), cfg.grid.n_rounds.end());

  BoosterConfig base = cfg.booster;
  base.n_classes = train.n_classes();
  base.positive_class = positive;
  base.seed = seed;
  base.early_stopping_rounds.reset();

  std::optional<GridPoint> chosen;
  double best = -std::numeric_limits<double>::infinity();
  for (double r : rs) {
    for (double q : qs) {
      for (double lr : cfg.grid.learning_rate) {
        BoosterConfig bc = base;
        bc.loss = method.loss;
        bc.loss.r = r;
        bc.loss.q = q;
        bc.learning_rate = lr;
        bc.n_rounds = max_rounds;
        const BoosterModel full = fit(fit_set, bc);
        // Boosting is sequential and seeded per round, so the first k trees
        // of a longer run are exactly a k-round fit.
        for (int rounds : cfg.grid.n_rounds) {
          const BoosterModel m = full.truncated(static_cast<std::size_t>(rounds));
          const double score =
              task_metric(predict_proba(m, val_set), val_set.labels(), positive);
          if (score > best) {
            best = score;
            chosen = GridPoint{r, q, lr, rounds};
          }
        }
      }
    }
  }
  if (!chosen) throw NumericError("grid search produced no finite score for " + method.name);

  BoosterConfig bc = base;
  bc.loss = method.loss;
  bc.loss.r = chosen->r;
  bc.loss.q = chosen->q;
  bc.learning_rate = chosen->learning_rate;
  bc.n_rounds = chosen->n_rounds;
  const BoosterModel model = fit(train, bc);

  CellResult row;
  row.dataset = cfg.dataset_name;
  row.method = method.name;
  row.metric = task_metric_name(train.n_classes());
  row.value = task_metric(predict_proba(model, test), test.labels(), positive);
  row.params = describe_point(method, *chosen);
  return row;
}

struct CellOutput {
  std::vector<CellResult> rows;
  CellAudit audit;
};

CellOutput run_cell(const TabularDataset& data, const ExperimentConfig& cfg, std::size_t gi,
                    int repeat, int positive) {
  const double gamma = cfg.noise_levels[gi];
  const int n_classes = data.n_classes();
  const SplitPlan plan =
      train_test_split(data, cfg.split_fraction, split_seed(cfg.master_seed, repeat), cfg.stratified);

  std::vector<int> train_labels;
  train_labels.reserve(plan.train_indices.size());
  for (auto i : plan.train_indices) train_labels.push_back(data.label(i));

  NoiseSpec ns;
  ns.rate = gamma;
  ns.protocol = n_classes == 2 ? NoiseProtocol::kBinaryPairflip : NoiseProtocol::kMulticlassPairflip;
  ns.seed = noise_seed(cfg.master_seed, gi, repeat);
  ns.wrap_last_class = cfg.wrap_last_class;
  const NoiseResult noise = inject(train_labels, n_classes, ns);

  CellOutput out;
  out.audit.gamma = gamma;
  out.audit.repeat = repeat;
  out.audit.test_indices = plan.test_indices;
  for (const auto& rec : noise.log) {
    const FlipRecord global{plan.train_indices[rec.index], rec.old_label, rec.new_label};
    if (std::binary_search(plan.test_indices.begin(), plan.test_indices.end(), global.index))
      out.audit.pure = false;
    out.audit.flips.push_back(global);
  }

  const TabularDataset train = data.subset(plan.train_indices).with_labels(noise.labels);
  const TabularDataset test = data.subset(plan.test_indices);
  for (std::size_t k = 0; k < plan.test_indices.size(); ++k) {
    if (test.label(k) != data.label(plan.test_indices[k])) out.audit.pure = false;
  }

  const std::uint64_t tseed = tuning_seed(cfg.master_seed, gi, repeat);
  SplitPlan inner;
  try {
    inner = train_test_split(train, cfg.tuning_fraction, tseed, cfg.stratified);
  } catch (const DataError&) {
    inner = train_test_split(train, cfg.tuning_fraction, tseed, false);
  }
  const TabularDataset fit_set = train.subset(inner.train_indices);
  const TabularDataset val_set = train.subset(inner.test_indices);

  for (const auto& method : cfg.methods) {
    CellResult row = run_method(method, cfg, fit_set, val_set, train, test, positive, tseed);
    row.gamma = gamma;
    row.repeat = repeat;
    out.rows.push_back(std::move(row));
  }
  return out;
}

bool row_less(const CellResult& a, const CellResult& b) {
  return std::tie(a.dataset, a.method, a.gamma, a.repeat) <
         std::tie(b.dataset, b.method, b.gamma, b.repeat);
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

MethodSpec method_from_name(const std::string& name, const HyperGrid& grid, const LossSpec& base) {
  MethodSpec m;
  m.name = name;
  m.loss = base;
  if (name == "cce") {
    m.loss.family = LossFamily::kCce;
  } else if (name == "fl" || name == "rfl_q0") {
    m.loss.family = LossFamily::kFl;
    m.r_values = grid.r;
  } else if (name == "gce") {
    m.loss.family = LossFamily::kGce;
    m.q_values = grid.q;
  } else if (name == "rfl") {
    m.loss.family = LossFamily::kRfl;
    m.r_values = grid.r;
    m.q_values = grid.q;
  } else if (name == "rfl_r0") {
    m.loss.family = LossFamily::kRfl;
    m.r_values = {0.0};
    m.q_values = grid.q;
  } else if (name == "mae") {
    m.loss.family = LossFamily::kMae;
  } else if (name == "sce") {
    m.loss.family = LossFamily::kSce;
  } else if (name == "nce") {
    m.loss.family = LossFamily::kNce;
  } else {
    throw ConfigError("unknown method '" + name + "'");
  }
  return m;
}

std::vector<MethodSpec> ablation_methods(const HyperGrid& grid, const LossSpec& base) {
  return {method_from_name("rfl", grid, base), method_from_name("rfl_r0", grid, base),
          method_from_name("rfl_q0", grid, base)};
}

void ExperimentConfig::validate() const {
  if (noise_levels.empty()) throw ConfigError("noise_levels must not be empty");
  for (double g : noise_levels) {
    if (!(g >= 0.0 && g < 0.5)) throw ConfigError("noise levels must lie in [0, 0.5)");
  }
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split_fraction must lie in (0, 1)");
  if (!(tuning_fraction > 0.0 && tuning_fraction < 1.0))
    throw ConfigError("tuning_fraction must lie in (0, 1)");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (grid.learning_rate.empty() || grid.n_rounds.empty())
    throw ConfigError("learning_rate and n_rounds grids must not be empty");
  for (int n : grid.n_rounds) {
    if (n < 1) throw ConfigError("grid_n_rounds entries must be >= 1");
  }
  for (double lr : grid.learning_rate) {
    if (!(lr > 0.0 && lr <= 1.0)) throw ConfigError("grid_learning_rate entries must lie in (0, 1]");
  }
  for (const auto& m : methods) {
    LossSpec probe = m.loss;
    for (double r : m.r_values) {
      probe.r = r;
      probe.validate();
    }
    probe = m.loss;
    for (double q : m.q_values) {
      probe.q = q;
      probe.validate();
    }
    m.loss.validate();
  }
  booster.tree.validate();
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::uint64_t split_seed(std::uint64_t master, int repeat) {
  return derive_seed(master, kSplitStream, static_cast<std::uint64_t>(repeat));
}

std::uint64_t noise_seed(std::uint64_t master, std::size_t gamma_index, int repeat) {
  return derive_seed(master, kNoiseStream, gamma_index, static_cast<std::uint64_t>(repeat));
}

std::uint64_t tuning_seed(std::uint64_t master, std::size_t gamma_index, int repeat) {
  return derive_seed(master, kTuningStream, gamma_index, static_cast<std::uint64_t>(repeat));
}

SweepResult run_sweep(const TabularDataset& data, const ExperimentConfig& config) {
  config.validate();
  if (data.n_classes() < 2) throw DataError("sweep needs at least two classes");
  const int positive = minority_class(data.labels(), data.n_classes());

  std::vector<std::pair<std::size_t, int>> cells;
  for (std::size_t gi = 0; gi < config.noise_levels.size(); ++gi) {
    for (int rep = 0; rep < config.repeats; ++rep) cells.emplace_back(gi, rep);
  }
  std::vector<CellOutput> outputs(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      try {
        outputs[k] = run_cell(data, config, cells[k].first, cells[k].second, positive);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.threads), cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SweepResult result;
  for (auto& out : outputs) {
    for (auto& row : out.rows) result.rows.push_back(std::move(row));
    result.audits.push_back(std::move(out.audit));
  }
  std::sort(result.rows.begin(), result.rows.end(), row_less);
  return result;
}

ExperimentConfig experiment_from_config(const KeyValueConfig& cfg) {
  ExperimentConfig e;
  e.dataset_name = cfg.get_string("dataset_name", e.dataset_name);
  e.noise_levels = cfg.get_doubles("noise_levels", e.noise_levels);
  e.repeats = static_cast<int>(cfg.get_int("repeats", e.repeats));
  e.split_fraction = cfg.get_double("split_fraction", e.split_fraction);
  e.stratified = cfg.get_bool("stratified", e.stratified);
  e.tuning_fraction = cfg.get_double("tuning_fraction", e.tuning_fraction);
  e.wrap_last_class = cfg.get_bool("wrap_last_class", e.wrap_last_class);
  e.grid.r = cfg.get_doubles("grid_r", e.grid.r);
  e.grid.q = cfg.get_doubles("grid_q", e.grid.q);
  e.grid.learning_rate = cfg.get_doubles("grid_learning_rate", e.grid.learning_rate);
  std::vector<std::int64_t> default_rounds(e.grid.n_rounds.begin(), e.grid.n_rounds.end());
  e.grid.n_rounds.clear();
  for (auto v : cfg.get_ints("grid_n_rounds", default_rounds)) e.grid.n_rounds.push_back(static_cast<int>(v));

  LossSpec base;
  base.eta = cfg.get_double("eta", base.eta);
  base.sce_alpha = cfg.get_double("sce_alpha", base.sce_alpha);
  base.sce_beta = cfg.get_double("sce_beta", base.sce_beta);
  base.imbalance_factor = cfg.get_bool("imbalance_factor", base.imbalance_factor);
  base.safeguard = cfg.get_bool("safeguard", base.safeguard);
  for (const auto& name : cfg.get_strings("methods", {"rfl", "cce"})) {
    e.methods.push_back(method_from_name(name, e.grid, base));
  }

  e.booster.tree = tree_config_from_config(cfg);
  e.booster.subsample = cfg.get_double("subsample", e.booster.subsample);
  e.booster.force_one_vs_all = cfg.get_bool("force_one_vs_all", false);
  e.master_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  e.threads = static_cast<int>(cfg.get_int("threads", 1));
  e.validate();
  return e;
}

void write_results_csv(std::ostream& out, const std::vector<CellResult>& rows) {
  out << "dataset,method,gamma,repeat,metric,value,params\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.method << ',' << format_number(r.gamma) << ',' << r.repeat << ','
        << r.metric << ',' << format_number(r.value) << ',' << r.params << '\n';
  }
}

std::vector<CellResult> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("dataset,method,gamma,repeat,metric,value", 0) != 0)
    throw FormatError("results file is missing its header");
  std::vector<CellResult> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() < 6) throw ParseError("results row needs at least 6 fields", row, f.size());
    CellResult r;
    r.dataset = f[0];
    r.method = f[1];
    r.gamma = parse_number(f[2], row);
    r.repeat = static_cast<int>(parse_number(f[3], row));
    r.metric = f[4];
    r.value = parse_number(f[5], row);
    if (f.size() > 6) r.params = f[6];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<CellResult>& rows) {
  std::map<std::tuple<std::string, std::string, double>, std::vector<double>> groups;
  for (const auto& r : rows) groups[{r.dataset, r.method, r.gamma}].push_back(r.value);
  std::vector<SummaryRow> out;
  for (const auto& [key, values] : groups) {
    SummaryRow s;
    std::tie(s.dataset, s.method, s.gamma) = key;
    s.n = static_cast<int>(values.size());
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / s.n;
    if (s.n > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      s.stddev = std::sqrt(ss / (s.n - 1));
    }
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "dataset,method,gamma,mean,stddev,n\n";
  for (const auto& s : rows) {
    out << s.dataset << ',' << s.method << ',' << format_number(s.gamma) << ',' << format_number(s.mean)
        << ',' << format_number(s.stddev) << ',' << s.n << '\n';
  }
}

void write_summary_json(std::ostream& out, const std::vector<SummaryRow>& rows,
                        const ExperimentConfig& config) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["dataset"] = config.dataset_name;
  doc["noise_levels"] = config.noise_levels;
  doc["repeats"] = config.repeats;
  doc["split_fraction"] = config.split_fraction;
  doc["stratified"] = config.stratified;
  doc["tuning_fraction"] = config.tuning_fraction;
  doc["master_seed"] = config.master_seed;
  doc["grid"] = {{"r", config.grid.r},
                 {"q", config.grid.q},
                 {"learning_rate", config.grid.learning_rate},
                 {"n_rounds", config.grid.n_rounds}};
  ordered_json cells = ordered_json::array();
  for (const auto& s : rows) {
    cells.push_back({{"dataset", s.dataset},
                     {"method", s.method},
                     {"gamma", s.gamma},
                     {"mean", s.mean},
                     {"stddev", s.stddev},
                     {"n", s.n}});
  }
  doc["cells"] = std::move(cells);
  out << doc.dump(2) << '\n';
}

RankReport make_report(const std::vector<CellResult>& rows) {
  if (rows.empty()) throw DataError("no results to report");
  const auto summary = summarize(rows);
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<std::pair<std::string, double>> derived_keys;
  std::map<std::pair<std::string, double>, std::map<std::string, double>> table;
  for (const auto& s : summary) {
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
    if (std::find(datasets.begin(), datasets.end(), s.dataset) == datasets.end()) datasets.push_back(s.dataset);
    table[{s.dataset, s.gamma}][s.method] = s.mean;
  }
  std::sort(methods.begin(), methods.end());
  std::sort(datasets.begin(), datasets.end());

  std::vector<std::vector<double>> scores;
  std::vector<std::string> row_names;
  std::vector<std::string> row_dataset;
  for (const auto& [key, by_method] : table) {
    std::vector<double> row;
    for (const auto& m : methods) {
      const auto it = by_method.find(m);
      if (it == by_method.end())
        throw DataError("method '" + m + "' has no result for " + key.first + " at gamma " +
                        format_number(key.second));
      row.push_back(it->second);
    }
    scores.push_back(std::move(row));
    row_names.push_back(key.first + "@" + format_number(key.second));
    row_dataset.push_back(key.first);
  }

  RankReport report;
  report.derived = rank_methods(scores, methods, /*higher_is_better=*/true, row_names);
  report.datasets = datasets;
  report.dataset_ranks.assign(datasets.size(), std::vector<double>(methods.size(), 0.0));
  std::vector<int> counts(datasets.size(), 0);
  for (std::size_t r = 0; r < row_dataset.size(); ++r) {
    const auto d = static_cast<std::size_t>(
        std::find(datasets.begin(), datasets.end(), row_dataset[r]) - datasets.begin());
    for (std::size_t m = 0; m < methods.size(); ++m) report.dataset_ranks[d][m] += report.derived.ranks[r][m];
    ++counts[d];
  }
  report.average.assign(methods.size(), 0.0);
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      report.dataset_ranks[d][m] /= counts[d];
      report.average[m] += report.dataset_ranks[d][m] / static_cast<double>(datasets.size());
    }
  }
  return report;
}

void write_report_csv(std::ostream& out, const RankReport& report) {
  out << "dataset";
  for (const auto& m : report.derived.methods) out << ',' << m;
  out << '\n';
  for (std::size_t d = 0; d < report.datasets.size(); ++d) {
    out << report.datasets[d];
    for (double v : report.dataset_ranks[d]) out << ',' << format_number(v);
    out << '\n';
  }
  out << "Average";
  for (double v : report.average) out << ',' << format_number(v);
  out << '\n';
}

}  // namespace rgbdt
