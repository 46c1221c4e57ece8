// Acceptance run: one line per criterion with its verdict, the measured
// quantity and the wall time against the budget. Exit status is non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "fixtures.hpp"
#include "fuzz.hpp"
#include "oracles.hpp"
#include "rgbdt/booster.hpp"
#include "rgbdt/experiment.hpp"
#include "rgbdt/metrics.hpp"
#include "rgbdt/noise.hpp"
#include "rgbdt/synthetic.hpp"
#include "rgbdt/tree.hpp"

using namespace rgbdt;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Verdict()> run;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

const LossFamily kFamilies[] = {LossFamily::kCce, LossFamily::kMae, LossFamily::kFl, LossFamily::kGce,
                                LossFamily::kSce, LossFamily::kNce, LossFamily::kRfl};

Verdict derivatives() {
  Rng rng(1);
  int phat_checks = 0, score_checks = 0, bad = 0;
  std::string first_bad;
  for (auto family : kFamilies) {
    for (int k = 0; k < 200; ++k) {
      LossSpec spec;
      double phat;
      // Redraw the rare points sitting on a kink of the reference formula.
      do {
        spec = oracle::random_spec(family, rng);
        phat = 0.001 + 0.998 * rng.uniform();
      } while (oracle::kink_distance(spec, oracle::derivative_point(spec, phat)) < 1e-6L ||
               oracle::derivative_point(spec, phat) >= 1.0L);
      const auto d = loss_d1_d2_phat(spec, PHat(phat));
      const auto ref = oracle::phat_derivatives(spec, phat);
      ++phat_checks;
      if (!oracle::close(d.d1, ref.d1) || !oracle::close(d.d2, ref.d2)) {
        if (bad++ == 0) first_bad = describe(spec) + " p=" + fmt(phat, 17);
      }
    }
    for (int k = 0; k < 200; ++k) {
      LossSpec spec;
      int y;
      double z;
      do {
        spec = oracle::random_spec(family, rng);
        y = rng.uniform() < 0.5 ? 0 : 1;
        z = 16.0 * rng.uniform() - 8.0;
        const double p = static_cast<double>(PHat::from_score(y, z).value());
        if (oracle::kink_distance(spec, oracle::derivative_point(spec, p)) >= 1e-6L) break;
      } while (true);
      const auto gh = grad_hess(spec, y, z);
      const auto ref = oracle::score_derivatives(spec, y, z);
      ++score_checks;
      if (!oracle::close(gh.g, ref.g) || !oracle::close(gh.h, ref.h)) {
        if (bad++ == 0) first_bad = describe(spec) + " y=" + std::to_string(y) + " z=" + fmt(z, 17);
      }
    }
  }
  std::string detail = std::to_string(phat_checks) + " p-hat and " + std::to_string(score_checks) +
                       " score draws, " + std::to_string(bad) + " mismatches";
  if (bad) detail += " (first: " + first_bad + ")";
  return {bad == 0, detail};
}

Verdict hessian_grid() {
  std::vector<LossSpec> must_hold = {LossSpec::cce(), LossSpec::sce(1.0, 1.0)};
  for (double r : {0.5, 1.0, 2.0}) must_hold.push_back(LossSpec::focal(r));
  for (int i = 1; i <= 9; ++i) must_hold.push_back(LossSpec::gce(0.1 * i));
  for (double r : {0.5, 1.0, 2.0}) {
    for (int i = 1; i <= 9; ++i) must_hold.push_back(LossSpec::rfl(r, 0.1 * i));
  }
  int held = 0;
  std::string failed;
  for (const auto& spec : must_hold) {
    if (check_necessary_condition(spec, 10000).holds) {
      ++held;
    } else if (failed.empty()) {
      failed = describe(spec);
    }
  }
  int raw_fail_at_half = 0;
  for (LossSpec spec : {LossSpec::mae(), LossSpec::nce()}) {
    spec.safeguard = false;
    const auto report = check_necessary_condition(spec, 10000);
    const bool at_half = std::any_of(report.violations.begin(), report.violations.end(),
                                     [](const HessianViolation& v) { return v.phat == 0.5; });
    if (!report.holds && at_half) ++raw_fail_at_half;
  }
  std::string detail = std::to_string(held) + "/" + std::to_string(must_hold.size()) +
                       " hold, raw MAE/NCE violated at 0.5: " + std::to_string(raw_fail_at_half) + "/2";
  if (!failed.empty()) detail += " (first failure: " + failed + ")";
  return {held == static_cast<int>(must_hold.size()) && raw_fail_at_half == 2, detail};
}

Verdict degeneration() {
  double gce_gap = 0.0, fl_gap = 0.0, cce_gap = 0.0;
  for (int i = 1; i <= 99; ++i) {
    const PHat p(0.01 * i);
    for (double q : {0.1, 0.3, 0.5, 0.7, 1.0}) {
      const Loss rfl(LossSpec::rfl(0.0, q)), gce(LossSpec::gce(q));
      const auto a = rfl.derivatives(p), b = gce.derivatives(p);
      gce_gap = std::max({gce_gap, std::fabs(rfl.value(p) - gce.value(p)), std::fabs(a.d1 - b.d1),
                          std::fabs(a.d2 - b.d2)});
    }
    for (double r : {0.5, 1.0, 2.0}) {
      fl_gap = std::max(fl_gap, std::fabs(loss_value(LossSpec::rfl(r, 1e-6), p) -
                                          loss_value(LossSpec::focal(r), p)));
    }
    cce_gap = std::max(cce_gap, std::fabs(loss_value(LossSpec::rfl(0.0, 1e-6), p) -
                                          loss_value(LossSpec::cce(), p)));
  }
  return {gce_gap == 0.0 && fl_gap < 1e-4 && cce_gap < 1e-4,
          "max |RFL(0,q)-GCE(q)|=" + fmt(gce_gap) + ", |RFL(r,1e-6)-FL(r)|=" + fmt(fl_gap) +
              ", |RFL(0,1e-6)-CCE|=" + fmt(cce_gap)};
}

Verdict split_oracle() {
  Rng rng(4);
  int agree = 0, splits = 0;
  for (int k = 0; k < 200; ++k) {
    const auto node = fixture::fuzz_node(rng);
    const TreeConfig cfg = fixture::fuzz_tree_config(rng);
    const auto idx = fixture::all_indices(node.data.n_samples());
    const auto expected = oracle::brute_force_split(node.data, idx, node.gh, cfg);
    const Tree tree = grow_tree(node.data, idx, node.gh, cfg);
    const auto& root = tree.nodes().front();
    double h_root = 0.0;
    for (const auto& p : node.gh) h_root += p.h;
    if (!expected || h_root < cfg.min_sum_hessian) {
      agree += root.is_leaf() ? 1 : 0;
      continue;
    }
    ++splits;
    const auto found = best_split(node.data, idx, node.gh, cfg);
    agree += !root.is_leaf() && root.feature == expected->feature &&
                     root.threshold == expected->threshold &&
                     root.default_left == expected->default_left && found &&
                     found->gain == expected->gain
                 ? 1
                 : 0;
  }
  return {agree == 200, std::to_string(agree) + "/200 agree (" + std::to_string(splits) + " with a split)"};
}

Verdict appendix_identity() {
  Rng rng(5);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    GainScenario s;
    s.G = 10.0 * rng.normal();
    s.H = 0.01 + 20.0 * rng.uniform();
    s.mu = 0.01 + 0.98 * rng.uniform();
    s.theta = 0.01 + 0.99 * rng.uniform();
    s.tau = s.mu;
    s.lambda = 0.0;
    worst = std::max(worst, std::fabs(appendix_gain(s)));
  }
  return {worst <= 1e-12, "max |gain| over 10^4 scenarios = " + fmt(worst)};
}

Verdict newton_step() {
  const auto data = fixture::table({{0.0}}, {1}, 2);
  BoosterConfig config;
  config.loss = LossSpec::cce();
  config.n_rounds = 1;
  config.learning_rate = 1.0;
  config.tree.lambda = 0.0;
  const auto model = fit(data, config);
  const double z = predict_raw(model, data).at(0, 0);
  return {z == 2.0, "z after one round = " + fmt(z, 17)};
}

Verdict monotone_cce() {
  const auto data = synthetic::separable(200, 0);
  BoosterConfig config;
  config.loss = LossSpec::cce();
  config.n_rounds = 100;
  config.learning_rate = 0.3;
  TrainingLog log;
  fit(data, config, {.log = &log});
  int increases = 0;
  double previous = INFINITY;
  for (const auto& r : log.rounds) {
    if (r.train_loss > previous) ++increases;
    previous = r.train_loss;
  }
  const double final_metric = log.rounds.back().train_metric;
  return {increases == 0 && final_metric >= 0.999 && log.rounds.size() == 100,
          std::to_string(increases) + " loss increases over " + std::to_string(log.rounds.size()) +
              " rounds, final train AUCPR " + fmt(final_metric)};
}

Verdict noise_counts() {
  std::vector<int> labels(90, 0);
  labels.insert(labels.end(), 10, 1);
  const auto bin = inject_binary(labels, {0.3, NoiseProtocol::kBinaryPairflip, 8, true});
  int to_min = 0, to_maj = 0;
  for (const auto& f : bin.log) (f.new_label == 1 ? to_min : to_maj) += 1;
  const auto minority_after = std::count(bin.labels.begin(), bin.labels.end(), 1);

  std::vector<int> multi(100000);
  for (std::size_t i = 0; i < multi.size(); ++i) multi[i] = static_cast<int>(i % 3);
  const auto m = inject_multiclass(multi, 3, {0.2, NoiseProtocol::kMulticlassPairflip, 9, true});
  const double fraction = static_cast<double>(m.log.size()) / 1e5;
  const double sigma = std::sqrt(0.2 * 0.8 / 1e5);
  bool successors = true;
  for (const auto& f : m.log) successors &= f.new_label == (f.old_label + 1) % 3;
  const bool pass = to_min == 3 && to_maj == 3 && minority_after == 10 &&
                    std::fabs(fraction - 0.2) <= 4 * sigma && successors;
  return {pass, "binary " + std::to_string(to_maj) + "+" + std::to_string(to_min) +
                    " flips, minority kept at " + std::to_string(minority_after) +
                    "; multiclass fraction " + fmt(fraction) + " (|z|=" +
                    fmt(std::fabs(fraction - 0.2) / sigma, 3) + " sigma)"};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::map<std::pair<std::string, double>, double> medians(const SweepResult& result) {
  std::map<std::pair<std::string, double>, std::vector<double>> values;
  for (const auto& row : result.rows) values[{row.method, row.gamma}].push_back(row.value);
  std::map<std::pair<std::string, double>, double> out;
  for (const auto& [key, v] : values) out[key] = median(v);
  return out;
}

ExperimentConfig imbalanced_sweep(const std::vector<std::string>& methods,
                                  const std::vector<double>& gammas) {
  ExperimentConfig config;
  config.dataset_name = "imbalanced";
  config.noise_levels = gammas;
  config.repeats = 10;
  for (const auto& m : methods) config.methods.push_back(method_from_name(m, config.grid));
  return config;
}

Verdict robustness() {
  const auto data = synthetic::imbalanced({}, 0);
  const auto med = medians(run_sweep(data, imbalanced_sweep({"rfl", "cce"}, {0.0, 0.3})));
  const double rfl0 = med.at({"rfl", 0.0}), rfl3 = med.at({"rfl", 0.3});
  const double cce0 = med.at({"cce", 0.0}), cce3 = med.at({"cce", 0.3});
  const bool level = rfl3 >= cce3;
  const bool drop = rfl0 - rfl3 <= cce0 - cce3;
  return {level && drop, "median AUCPR at 0.3: RFL " + fmt(rfl3, 4) + " vs CCE " + fmt(cce3, 4) +
                             "; drop RFL " + fmt(rfl0 - rfl3, 4) + " vs CCE " + fmt(cce0 - cce3, 4)};
}

Verdict ablation() {
  const auto data = synthetic::imbalanced({}, 0);
  const auto med = medians(run_sweep(data, imbalanced_sweep({"rfl", "rfl_r0"}, {0.0, 0.3})));
  const double full = med.at({"rfl", 0.3}), r0 = med.at({"rfl_r0", 0.3});
  return {full >= r0, "median AUCPR at 0.3: RFL " + fmt(full, 4) + " vs r=0 " + fmt(r0, 4)};
}

Verdict metric_oracle() {
  Rng rng(11);
  int exact = 0;
  for (int k = 0; k < 500; ++k) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(8)) / 7.0;
      y[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    // Both classes must occur.
    const std::size_t a = rng.below(n);
    const std::size_t b = (a + 1 + rng.below(n - 1)) % n;
    y[a] = 1;
    y[b] = 0;
    exact += aucpr(s, y) == oracle::brute_force_aucpr(s, y) ? 1 : 0;
  }
  const double worked = aucpr(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<int>{1, 0, 1, 0});
  return {exact == 500 && std::fabs(worked - 0.8333) <= 1e-4 && std::fabs(worked - 5.0 / 6.0) <= 1e-6,
          std::to_string(exact) + "/500 exact, worked example " + fmt(worked, 10)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism_purity() {
  const fs::path root = fs::temp_directory_path() / ("rgbdt_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "sweep.cfg");
    cfg << "synthetic = imbalanced\nsynthetic_n = 800\nnoise_levels = 0, 0.2, 0.4\nrepeats = 3\n"
           "methods = rfl, cce\ngrid_n_rounds = 20, 40\n";
  }
  auto sweep = [&](const std::string& dir, const std::string& threads) {
    std::ostringstream out, err;
    return cli::run({"rgbdt", "sweep", "--config", (root / "sweep.cfg").string(), "--out",
                     (root / dir).string(), "--seed", "42", "--threads", threads},
                    out, err);
  };
  const int a = sweep("a", "1"), b = sweep("b", "1"), c = sweep("c", "2");
  const std::string first = slurp(root / "a" / "results.csv");
  const bool identical = a == 0 && b == 0 && c == 0 && !first.empty() &&
                         first == slurp(root / "b" / "results.csv") &&
                         first == slurp(root / "c" / "results.csv") &&
                         slurp(root / "a" / "summary.csv") == slurp(root / "b" / "summary.csv");
  fs::remove_all(root);

  // Purity, checked independently of the audit flag the sweep computes.
  const auto data = synthetic::imbalanced({.n = 800}, 0);
  ExperimentConfig config = imbalanced_sweep({"cce"}, {0.1, 0.2, 0.3, 0.4});
  config.repeats = 3;
  config.grid.n_rounds = {10};
  config.master_seed = 42;
  const auto result = run_sweep(data, config);
  std::size_t flips = 0, touching = 0;
  for (const auto& audit : result.audits) {
    for (const auto& f : audit.flips) {
      ++flips;
      if (std::binary_search(audit.test_indices.begin(), audit.test_indices.end(),
                             static_cast<std::uint32_t>(f.index)))
        ++touching;
    }
  }
  return {identical && touching == 0 && flips > 0,
          std::string("reruns ") + (identical ? "bitwise identical" : "DIFFER") + "; " +
              std::to_string(touching) + " of " + std::to_string(flips) + " flips touch test indices"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "derivative correctness", 5, derivatives},
      {2, "Hessian positivity grid", 5, hessian_grid},
      {3, "degeneration identities", 1, degeneration},
      {4, "split oracle", 10, split_oracle},
      {5, "gain identity at tau = mu", 1, appendix_identity},
      {6, "Newton step", 1, newton_step},
      {7, "CCE loss monotonicity", 10, monotone_cce},
      {8, "noise injection counts", 2, noise_counts},
      {9, "robustness under 30% noise", 180, robustness},
      {10, "ablation shape", 180, ablation},
      {11, "AUCPR oracle", 5, metric_oracle},
      {12, "determinism and purity", 60, determinism_purity},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = v.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] %2d %-28s %8.3fs / %4.0fs%s  %s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                seconds, c.budget_seconds, in_time ? "" : " OVER BUDGET", v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
