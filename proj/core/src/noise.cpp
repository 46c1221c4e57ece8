#include "rgbdt/noise.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "rgbdt/dataset.hpp"
#include "rgbdt/error.hpp"
#include "rgbdt/random.hpp"

namespace rgbdt {

namespace {

// floor(rate * n), ignoring representation error just below an integer
// (0.3 * 10 must give 3).
std::size_t flip_budget(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t k,
                                                  Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(std::isfinite(rate) && rate >= 0.0 && rate < 0.5))
    throw ConfigError("noise rate must lie in [0, 0.5), got " + std::to_string(rate));
}

NoiseResult inject_binary(std::span<const int> labels, const NoiseSpec& spec) {
  spec.validate();
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw DataError("binary noise protocol needs labels in {0, 1}");
    by_class[labels[i]].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty())
    throw DataError("binary noise protocol needs both classes present");

  const int minority = minority_class(labels, 2);
  const int majority = 1 - minority;
  const auto& min_pool = by_class[minority];
  const auto& maj_pool = by_class[majority];
  const std::size_t k = flip_budget(spec.rate, min_pool.size());
  if (k > min_pool.size() || k > maj_pool.size())
    throw DataError("flip count exceeds class size");

  NoiseResult out;
  out.labels.assign(labels.begin(), labels.end());
  if (k == 0) return out;
  Rng rng(spec.seed);
  const auto to_majority = draw_without_replacement(min_pool, k, rng);
  const auto to_minority = draw_without_replacement(maj_pool, k, rng);
  for (auto i : to_majority) out.log.push_back({i, minority, majority});
  for (auto i : to_minority) out.log.push_back({i, majority, minority});
  std::sort(out.log.begin(), out.log.end(),
            [](const FlipRecord& a, const FlipRecord& b) { return a.index < b.index; });
  for (const auto& rec : out.log) out.labels[rec.index] = rec.new_label;
  return out;
}

NoiseResult inject_multiclass(std::span<const int> labels, int n_classes, const NoiseSpec& spec) {
  spec.validate();
  if (n_classes < 3)
    throw ConfigError("pair-flip matrix protocol needs at least 3 classes; use the binary protocol");
  NoiseResult out;
  out.labels.assign(labels.begin(), labels.end());
  if (spec.rate == 0.0) return out;
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= n_classes) throw DataError("label outside [0, n_classes)");
    // One draw per sample keeps the stream aligned regardless of labels.
    const double u = rng.uniform();
    if (u >= spec.rate) continue;
    if (y == n_classes - 1 && !spec.wrap_last_class) continue;
    const int next = (y + 1) % n_classes;
    out.labels[i] = next;
    out.log.push_back({i, y, next});
  }
  return out;
}

NoiseResult inject(std::span<const int> labels, int n_classes, const NoiseSpec& spec) {
  if (spec.protocol == NoiseProtocol::kBinaryPairflip) {
    if (n_classes != 2) throw ConfigError("binary noise protocol on a " + std::to_string(n_classes) + "-class task");
    return inject_binary(labels, spec);
  }
  return inject_multiclass(labels, n_classes, spec);
}

FlipMatrixReport expected_flip_matrix(int n_classes, double rate, bool wrap_last_class) {
  if (n_classes < 2) throw ConfigError("flip matrix needs at least 2 classes");
  if (!(rate >= 0.0 && rate < 0.5)) throw ConfigError("noise rate must lie in [0, 0.5)");
  const auto c = static_cast<std::size_t>(n_classes);
  FlipMatrixReport rep;
  rep.matrix.assign(c, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < c; ++i) {
    const bool last = i + 1 == c;
    if (last && !wrap_last_class) {
      // No successor: the literal matrix leaves this row with mass 1 - rate.
      rep.matrix[i][i] = 1.0 - rate;
      continue;
    }
    rep.matrix[i][i] = 1.0 - rate;
    rep.matrix[i][(i + 1) % c] += rate;
  }
  for (const auto& row : rep.matrix) {
    double s = 0.0;
    for (double v : row) s += v;
    rep.row_sums.push_back(s);
  }
  return rep;
}

std::vector<int> apply_flip_log(std::span<const int> labels, std::span<const FlipRecord> log) {
  std::vector<int> out(labels.begin(), labels.end());
  for (const auto& rec : log) {
    if (rec.index >= out.size()) throw DataError("flip log index out of range");
    int& y = out[rec.index];
    if (y == rec.old_label) {
      y = rec.new_label;
    } else if (y == rec.new_label) {
      y = rec.old_label;
    } else {
      throw DataError("flip log does not match labels at index " + std::to_string(rec.index));
    }
  }
  return out;
}

void write_flip_log(std::ostream& out, std::span<const FlipRecord> log) {
  out << "sample_index,old_label,new_label\n";
  for (const auto& rec : log) out << rec.index << ',' << rec.old_label << ',' << rec.new_label << '\n';
}

std::vector<FlipRecord> read_flip_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("sample_index,old_label,new_label", 0) != 0)
    throw FormatError("flip log is missing its header");
  std::vector<FlipRecord> log;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream fields(line);
    FlipRecord rec;
    char c1 = 0, c2 = 0;
    if (!(fields >> rec.index >> c1 >> rec.old_label >> c2 >> rec.new_label) || c1 != ',' || c2 != ',')
      throw ParseError("malformed flip log line", row, 1);
    log.push_back(rec);
  }
  return log;
}

}  // namespace rgbdt
