#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rgbdt/error.hpp"
#include "rgbdt/noise.hpp"

using namespace rgbdt;

namespace {

std::vector<int> binary_labels(std::size_t minority, std::size_t majority) {
  std::vector<int> out(majority, 0);
  out.insert(out.end(), minority, 1);
  return out;
}

std::size_t count(const std::vector<int>& v, int c) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), c));
}

}  // namespace

TEST_CASE("binary protocol flips floor(rate * minority) each way") {
  const auto labels = binary_labels(10, 90);
  NoiseSpec spec{0.3, NoiseProtocol::kBinaryPairflip, 7, true};
  const auto out = inject_binary(labels, spec);
  std::size_t to_major = 0, to_minor = 0;
  for (const auto& rec : out.log) {
    CHECK(labels[rec.index] == rec.old_label);
    CHECK(out.labels[rec.index] == rec.new_label);
    (rec.new_label == 0 ? to_major : to_minor) += 1;
  }
  CHECK(to_major == 3);
  CHECK(to_minor == 3);
  CHECK(count(out.labels, 1) == 10);
  CHECK(std::is_sorted(out.log.begin(), out.log.end(),
                       [](const FlipRecord& a, const FlipRecord& b) { return a.index < b.index; }));

  spec.rate = 0.4;
  CHECK(inject_binary(binary_labels(5, 20), spec).log.size() == 4);
  spec.rate = 0.0;
  const auto none = inject_binary(labels, spec);
  CHECK(none.log.empty());
  CHECK(none.labels == labels);
}

TEST_CASE("binary protocol finds the minority by count, not by index") {
  std::vector<int> labels(30, 1);
  for (int i = 0; i < 6; ++i) labels[static_cast<std::size_t>(i * 5)] = 0;
  NoiseSpec spec{0.34, NoiseProtocol::kBinaryPairflip, 1, true};
  const auto out = inject_binary(labels, spec);
  CHECK(out.log.size() == 4);
  CHECK(count(out.labels, 0) == 6);
}

TEST_CASE("noise is deterministic and replayable") {
  const auto labels = binary_labels(40, 400);
  const NoiseSpec spec{0.25, NoiseProtocol::kBinaryPairflip, 11, true};
  const auto a = inject_binary(labels, spec);
  const auto b = inject_binary(labels, spec);
  CHECK(a.labels == b.labels);
  CHECK(a.log == b.log);
  CHECK(apply_flip_log(labels, a.log) == a.labels);
  CHECK(apply_flip_log(a.labels, a.log) == labels);

  NoiseSpec other = spec;
  other.seed = 12;
  CHECK(inject_binary(labels, other).log != a.log);

  std::stringstream io;
  write_flip_log(io, a.log);
  CHECK(io.str().rfind("sample_index,old_label,new_label\n", 0) == 0);
  CHECK(read_flip_log(io) == a.log);
}

TEST_CASE("multiclass pair flipping") {
  std::vector<int> labels(100000, 0);
  NoiseSpec spec{0.2, NoiseProtocol::kMulticlassPairflip, 5, true};
  const auto out = inject_multiclass(labels, 3, spec);
  const double fraction = static_cast<double>(count(out.labels, 1)) / 1e5;
  const double sigma = std::sqrt(0.2 * 0.8 / 1e5);
  CHECK(std::fabs(fraction - 0.2) <= 4 * sigma);
  CHECK(count(out.labels, 2) == 0);
  CHECK(out.log.size() == count(out.labels, 1));

  std::vector<int> last(1000, 2);
  CHECK(inject_multiclass(last, 3, spec).labels[0] == 2);
  CHECK(count(inject_multiclass(last, 3, spec).labels, 0) > 0);
  spec.wrap_last_class = false;
  CHECK(inject_multiclass(last, 3, spec).labels == last);
  spec.rate = 0.0;
  CHECK(inject_multiclass(labels, 3, spec).log.empty());

  CHECK_THROWS_AS(inject_multiclass(binary_labels(3, 3), 2, spec), ConfigError);
}

TEST_CASE("expected flip matrix") {
  const auto wrap = expected_flip_matrix(3, 0.2, true);
  const std::vector<std::vector<double>> expected = {{0.8, 0.2, 0.0}, {0.0, 0.8, 0.2}, {0.2, 0.0, 0.8}};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(wrap.matrix[i][j] == doctest::Approx(expected[i][j]));
    CHECK(wrap.row_sums[i] == doctest::Approx(1.0));
  }
  const auto identity = expected_flip_matrix(4, 0.0, true);
  for (std::size_t i = 0; i < 4; ++i) CHECK(identity.matrix[i][i] == 1.0);
  const auto open = expected_flip_matrix(4, 0.1, false);
  CHECK(open.row_sums[3] == doctest::Approx(0.9));
  CHECK(open.row_sums[0] == doctest::Approx(1.0));
}

TEST_CASE("noise spec validation") {
  NoiseSpec spec;
  spec.rate = 0.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.rate = -0.1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.rate = 0.1;
  CHECK_THROWS_AS(inject_binary(std::vector<int>{0, 0, 0}, spec), DataError);
  CHECK_THROWS_AS(inject_binary(std::vector<int>{0, 2, 1}, spec), DataError);
  std::stringstream bad("sample_index,old_label,new_label\n1,x,0\n");
  CHECK_THROWS(read_flip_log(bad));
}
