#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rgbdt {

// Average precision: positives are visited in descending score order and
// each group of tied scores contributes (positives in group / P) times the
// precision at the end of the group. labels are 0/1 with 1 positive.
// Throws DataError unless both classes occur.
double aucpr(std::span<const double> scores, std::span<const int> labels);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// Per-row fractional ranking of methods (1 = best, ties share the mean of
// the ranks they span), plus the aggregates reported in rank tables.
struct RankTable {
  std::vector<std::string> methods;
  std::vector<std::string> rows;
  std::vector<std::vector<double>> ranks;  // rows x methods
  std::vector<double> average_rank;        // per method
  // top_n[m][n - 1] = number of rows where method m has rank <= n.
  std::vector<std::vector<int>> top_n;
};

RankTable rank_methods(const std::vector<std::vector<double>>& scores,
                       std::vector<std::string> methods, bool higher_is_better,
                       std::vector<std::string> rows = {});

void write_rank_table_csv(std::ostream& out, const RankTable& table);
void write_top_n_csv(std::ostream& out, const RankTable& table);

}  // namespace rgbdt
