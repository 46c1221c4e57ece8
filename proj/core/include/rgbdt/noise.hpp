#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace rgbdt {

enum class NoiseProtocol { kBinaryPairflip, kMulticlassPairflip };

struct NoiseSpec {
  double rate = 0.0;  // gamma in [0, 0.5)
  NoiseProtocol protocol = NoiseProtocol::kBinaryPairflip;
  std::uint64_t seed = 0;
  // Class C-1 flips to class 0. When false the last class never flips.
  bool wrap_last_class = true;

  void validate() const;
};

struct FlipRecord {
  std::size_t index = 0;
  int old_label = 0;
  int new_label = 0;

  bool operator==(const FlipRecord&) const = default;
};

struct NoiseResult {
  std::vector<int> labels;
  std::vector<FlipRecord> log;  // ascending by index
};

// floor(rate * #minority) minority samples flip to the majority class and
// the same number of majority samples flip to the minority class, both drawn
// uniformly without replacement. Class sizes are preserved.
NoiseResult inject_binary(std::span<const int> labels, const NoiseSpec& spec);

// Each label i independently becomes its successor with probability rate.
NoiseResult inject_multiclass(std::span<const int> labels, int n_classes, const NoiseSpec& spec);

// Dispatches on spec.protocol.
NoiseResult inject(std::span<const int> labels, int n_classes, const NoiseSpec& spec);

struct FlipMatrixReport {
  std::vector<std::vector<double>> matrix;  // P(i, j)
  std::vector<double> row_sums;
};

FlipMatrixReport expected_flip_matrix(int n_classes, double rate, bool wrap_last_class);

// Swaps old_label and new_label at every logged index. Replaying a log on
// the original labels reproduces the noisy labels, and replaying it again
// restores the originals.
std::vector<int> apply_flip_log(std::span<const int> labels, std::span<const FlipRecord> log);

// CSV with header sample_index,old_label,new_label.
void write_flip_log(std::ostream& out, std::span<const FlipRecord> log);
std::vector<FlipRecord> read_flip_log(std::istream& in);

}  // namespace rgbdt
