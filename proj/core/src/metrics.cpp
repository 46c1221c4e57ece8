#include "rgbdt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rgbdt/error.hpp"

namespace rgbdt {

double aucpr(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("aucpr: scores and labels differ in length");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("aucpr: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == labels.size())
    throw DataError("aucpr is undefined unless both classes are present");
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("aucpr: NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double total_pos = static_cast<double>(positives);
  double weighted = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t group_tp = 0, group_fp = 0;
    const double s = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == s; ++k) {
      if (labels[order[k]] == 1) {
        ++group_tp;
      } else {
        ++group_fp;
      }
    }
    tp += group_tp;
    fp += group_fp;
    if (group_tp == 0) continue;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    weighted += static_cast<double>(group_tp) * precision;
  }
  // Dividing once keeps a perfect ranking at exactly 1.
  return weighted / total_pos;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw DataError("accuracy: length mismatch");
  if (truth.empty()) throw DataError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

RankTable rank_methods(const std::vector<std::vector<double>>& scores,
                       std::vector<std::string> methods, bool higher_is_better,
                       std::vector<std::string> rows) {
  const std::size_t m = methods.size();
  if (m == 0) throw DataError("rank_methods: no methods");
  if (rows.empty()) {
    for (std::size_t r = 0; r < scores.size(); ++r) rows.push_back("row" + std::to_string(r));
  }
  if (rows.size() != scores.size()) throw DataError("rank_methods: row label count mismatch");

  RankTable table;
  table.methods = std::move(methods);
  table.rows = std::move(rows);
  table.average_rank.assign(m, 0.0);
  table.top_n.assign(m, std::vector<int>(m, 0));

  for (const auto& row : scores) {
    if (row.size() != m) throw DataError("rank_methods: ragged score matrix");
    for (double v : row) {
      if (!std::isfinite(v)) throw DataError("rank_methods: non-finite score");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return higher_is_better ? row[a] > row[b] : row[a] < row[b];
    });
    std::vector<double> ranks(m);
    for (std::size_t k = 0; k < m;) {
      std::size_t end = k;
      while (end < m && row[order[end]] == row[order[k]]) ++end;
      // Positions k..end-1 hold ranks k+1..end.
      const double shared = (static_cast<double>(k + 1) + static_cast<double>(end)) / 2.0;
      for (std::size_t t = k; t < end; ++t) ranks[order[t]] = shared;
      k = end;
    }
    for (std::size_t j = 0; j < m; ++j) {
      table.average_rank[j] += ranks[j];
      for (std::size_t n = 1; n <= m; ++n) {
        if (ranks[j] <= static_cast<double>(n)) ++table.top_n[j][n - 1];
      }
    }
    table.ranks.push_back(std::move(ranks));
  }
  if (!scores.empty()) {
    for (auto& a : table.average_rank) a /= static_cast<double>(scores.size());
  }
  return table;
}

void write_rank_table_csv(std::ostream& out, const RankTable& table) {
  out << "dataset";
  for (const auto& name : table.methods) out << ',' << name;
  out << '\n';
  out.precision(6);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << table.rows[r];
    for (double v : table.ranks[r]) out << ',' << v;
    out << '\n';
  }
  out << "Average";
  for (double v : table.average_rank) out << ',' << v;
  out << '\n';
}

void write_top_n_csv(std::ostream& out, const RankTable& table) {
  out << "method";
  for (std::size_t n = 1; n <= table.methods.size(); ++n) out << ",top" << n;
  out << '\n';
  for (std::size_t j = 0; j < table.methods.size(); ++j) {
    out << table.methods[j];
    for (int c : table.top_n[j]) out << ',' << c;
    out << '\n';
  }
}

}  // namespace rgbdt
