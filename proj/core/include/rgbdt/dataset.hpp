#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rgbdt {

// One feature, dense, with a separate missing mask. Values under a set mask
// bit are unspecified (stored as 0).
struct FeatureColumn {
  std::vector<double> values;
  std::vector<std::uint8_t> missing;

  bool is_missing(std::size_t i) const { return missing[i] != 0; }
};

// Row-major feature batch used for prediction. NaN marks a missing value.
struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * n_cols, n_cols}; }
};

// Immutable columnar dataset. Construction builds, per feature, the indices
// of present samples sorted by value; split search reuses them every round.
class TabularDataset {
 public:
  TabularDataset() = default;
  TabularDataset(std::vector<std::string> feature_names, std::vector<FeatureColumn> columns,
                 std::vector<int> labels, std::vector<std::string> class_names);

  std::size_t n_samples() const { return labels_.size(); }
  std::size_t n_features() const { return columns_.size(); }
  int n_classes() const { return static_cast<int>(class_names_.size()); }

  const FeatureColumn& column(std::size_t j) const { return columns_[j]; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t i) const { return labels_[i]; }

  // Present samples of feature j, ascending by value (ties by index).
  const std::vector<std::uint32_t>& sorted_present(std::size_t j) const { return sorted_[j]; }

  std::size_t missing_count() const;
  std::vector<std::size_t> class_counts() const;

  TabularDataset subset(std::span<const std::uint32_t> indices) const;
  TabularDataset with_labels(std::vector<int> labels) const;
  FeatureMatrix to_matrix() const;

 private:
  std::vector<std::string> feature_names_;
  std::vector<FeatureColumn> columns_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
  std::vector<std::vector<std::uint32_t>> sorted_;
};

struct CsvSchema {
  std::string label_column = "label";
  std::vector<std::string> missing_tokens = {"", "NA", "NaN", "?"};
  char delimiter = ',';
};

inline constexpr const char* kCanonicalMissing = "NA";

// Labels are encoded 0..C-1 in order of first appearance. No imputation.
TabularDataset read_csv(std::istream& in, const CsvSchema& schema);
TabularDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Features in stored order followed by the label column. Present values are
// written in shortest round-trip form, missing cells as kCanonicalMissing.
void write_csv(std::ostream& out, const TabularDataset& data, char delimiter = ',',
               const std::string& label_column = "label");
void save_csv(const std::filesystem::path& path, const TabularDataset& data, char delimiter = ',',
              const std::string& label_column = "label");

struct SplitPlan {
  std::vector<std::uint32_t> train_indices;
  std::vector<std::uint32_t> test_indices;
  double fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

// Train size is round(fraction * n). Stratified plans allocate it across
// classes by largest remainder, so every class is within one sample of its
// proportional share. Both index lists are returned sorted.
SplitPlan train_test_split(std::span<const int> labels, int n_classes, double fraction,
                           std::uint64_t seed, bool stratified);
SplitPlan train_test_split(const TabularDataset& data, double fraction, std::uint64_t seed,
                           bool stratified);

// Majority count over minority count among classes that occur.
double imbalance_ratio(std::span<const int> labels, int n_classes);
double imbalance_ratio(const TabularDataset& data);

// Index of the least frequent class (lowest index on ties).
int minority_class(std::span<const int> labels, int n_classes);

}  // namespace rgbdt
