#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "rgbdt/booster.hpp"
#include "rgbdt/error.hpp"
#include "rgbdt/metrics.hpp"
#include "rgbdt/random.hpp"
#include "rgbdt/synthetic.hpp"

using namespace rgbdt;

namespace {

BoosterConfig cce_config(int rounds, double lr) {
  BoosterConfig c;
  c.loss = LossSpec::cce();
  c.n_rounds = rounds;
  c.learning_rate = lr;
  return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

FeatureMatrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m{n, d, std::vector<double>(n * d)};
  for (double& v : m.data) v = rng.uniform() < 0.05 ? NAN : 4.0 * rng.uniform() - 2.0;
  return m;
}

}  // namespace

TEST_CASE("separable data reaches a perfect training ranking") {
  const auto data = synthetic::separable(200, 17);
  const auto model = fit(data, cce_config(50, 0.3));
  const auto proba = predict_proba(model, data);
  CHECK(aucpr(proba.column(1), data.labels()) >= 0.999);
}

TEST_CASE("single sample Newton step") {
  const auto data = fixture::table({{0.0}}, {1}, 2);
  auto config = cce_config(1, 1.0);
  config.tree.lambda = 0.0;
  const auto model = fit(data, config);
  REQUIRE(model.trees.size() == 1);
  CHECK(model.trees[0][0].nodes().size() == 1);
  CHECK(predict_raw(model, data).at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("model structure") {
  const auto blobs = synthetic::blobs(90, 3, 3);
  auto config = cce_config(4, 0.1);
  config.n_classes = 3;
  const auto model = fit(blobs, config);
  CHECK(model.n_lists() == 3);
  for (const auto& list : model.trees) CHECK(list.size() == 4);

  const auto proba = predict_proba(model, blobs);
  const auto raw = predict_raw(model, blobs);
  for (std::size_t i = 0; i < proba.n_rows; ++i) {
    double sum = 0.0;
    std::size_t raw_best = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      sum += proba.at(i, k);
      if (raw.at(i, k) > raw.at(i, raw_best)) raw_best = k;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
    CHECK(predict_labels(proba)[i] == static_cast<int>(raw_best));
  }

  BoosterModel empty = model.truncated(0);
  CHECK(empty.n_rounds_trained() == 0);
  const auto zero = predict_raw(empty, blobs);
  for (double v : zero.data) CHECK(v == 0.0);
  const auto even = predict_proba(empty.truncated(0), blobs);
  CHECK(even.at(0, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("a hand-made stump accumulates with the learning rate") {
  TreeNode root;
  root.feature = 0;
  root.threshold = 0.5;
  root.default_left = true;
  root.left = 1;
  root.right = 2;
  TreeNode left, right;
  left.weight = -1.0;
  right.weight = 1.0;
  BoosterModel model;
  model.config = cce_config(1, 0.1);
  model.n_features = 1;
  model.trees = {{Tree({root, left, right})}};
  const FeatureMatrix m{3, 1, {0.0, 1.0, NAN}};
  const auto raw = predict_raw(model, m);
  CHECK(raw.at(0, 0) == -0.1);
  CHECK(raw.at(1, 0) == 0.1);
  CHECK(raw.at(2, 0) == -0.1);
  const auto proba = predict_proba(model, m);
  CHECK(proba.at(0, 0) + proba.at(0, 1) == 1.0);
  CHECK_THROWS_AS(predict_raw(model, FeatureMatrix{1, 2, {0.0, 0.0}}), DataError);
}

TEST_CASE("prediction is batch invariant and serialization is lossless") {
  const auto data = synthetic::imbalanced({.n = 600}, 8);
  auto config = cce_config(10, 0.2);
  config.loss = LossSpec::rfl(1.0, 0.5);
  const auto model = fit(data, config);
  const auto rows = random_rows(1000, data.n_features(), 5);
  const auto batch = predict_raw(model, rows);
  for (std::size_t i = 0; i < rows.n_rows; i += 37) {
    FeatureMatrix one{1, rows.n_cols, {}};
    const auto r = rows.row(i);
    one.data.assign(r.begin(), r.end());
    CHECK(same_bits(predict_raw(model, one).at(0, 0), batch.at(i, 0)));
  }

  const auto restored = deserialize(serialize(model));
  const auto again = predict_raw(restored, rows);
  bool identical = true;
  for (std::size_t i = 0; i < batch.data.size(); ++i) identical &= same_bits(batch.data[i], again.data[i]);
  CHECK(identical);
  CHECK(serialize(restored) == serialize(model));

  // The training-time path through the dataset agrees with the matrix path.
  const auto via_data = predict_raw(model, data);
  const auto via_matrix = predict_raw(model, data.to_matrix());
  CHECK(via_data.data == via_matrix.data);

  BoosterModel empty;
  empty.config = config;
  empty.n_features = 2;
  empty.trees = {{}};
  const auto e = deserialize(serialize(empty));
  CHECK(e.n_lists() == 1);
  CHECK(e.n_rounds_trained() == 0);

  std::string doc = serialize(empty);
  const auto pos = doc.find("\"version\"");
  REQUIRE(pos != std::string::npos);
  const auto colon = doc.find(':', pos);
  doc.replace(colon + 1, doc.find_first_of(",}", colon) - colon - 1, " 99");
  CHECK_THROWS_AS(deserialize(doc), VersionError);
  CHECK_THROWS_AS(deserialize("{not json"), FormatError);
}

TEST_CASE("one-vs-all agrees with the binary path on two classes") {
  const auto data = synthetic::separable(300, 2, 0.02);
  auto config = cce_config(20, 0.3);
  const auto binary = fit(data, config);
  config.force_one_vs_all = true;
  const auto ova = fit(data, config);
  CHECK(ova.n_lists() == 2);
  const auto rows = random_rows(500, 2, 6);
  const auto pb = predict_labels(predict_proba(binary, rows));
  const auto po = predict_labels(predict_proba(ova, rows));
  std::size_t agree = 0;
  for (std::size_t i = 0; i < pb.size(); ++i) agree += pb[i] == po[i] ? 1u : 0u;
  CHECK(agree == pb.size());
}

TEST_CASE("training loss is non-increasing under CCE") {
  for (double lr : {0.1, 0.5, 1.0}) {
    const auto data = synthetic::imbalanced({.n = 800}, 3);
    TrainingLog log;
    fit(data, cce_config(40, lr), {.log = &log});
    REQUIRE(log.rounds.size() == 40);
    double previous = 800.0 * std::log(2.0) + 1e-9;
    for (const auto& r : log.rounds) {
      CAPTURE(lr);
      CAPTURE(r.round);
      CHECK(r.train_loss <= previous + 1e-9 * previous);
      previous = r.train_loss;
    }
  }
}

TEST_CASE("early stopping keeps the best validation round") {
  const auto train = synthetic::imbalanced({.n = 600}, 21);
  const auto valid = synthetic::imbalanced({.n = 600}, 22);
  auto config = cce_config(200, 0.5);
  config.early_stopping_rounds = 5;
  TrainingLog log;
  const auto model = fit(train, config, {.validation = &valid, .log = &log});
  double best = -1.0;
  for (const auto& r : log.rounds) best = std::max(best, *r.valid_metric);
  CHECK(log.best_valid_metric == best);
  CHECK(model.n_rounds_trained() == static_cast<std::size_t>(log.best_round));
  CHECK(log.rounds.size() < 200);
  const auto proba = predict_proba(model, valid);
  CHECK(aucpr(proba.column(1), valid.labels()) == best);

  config.early_stopping_rounds.reset();
  config.n_rounds = 1;
  config.early_stopping_rounds = 2;
  CHECK_THROWS_AS(fit(train, config), ConfigError);
}

TEST_CASE("fit determinism and subsampling") {
  const auto data = synthetic::imbalanced({.n = 500}, 4);
  auto config = cce_config(8, 0.2);
  config.subsample = 0.6;
  config.seed = 9;
  const auto a = serialize(fit(data, config));
  CHECK(a == serialize(fit(data, config)));
  config.seed = 10;
  CHECK(a != serialize(fit(data, config)));
}

TEST_CASE("fit errors") {
  const auto data = synthetic::separable(50, 1);
  auto config = cce_config(5, 0.1);
  config.learning_rate = 0.0;
  CHECK_THROWS_AS(fit(data, config), ConfigError);
  config.learning_rate = 1.5;
  CHECK_THROWS_AS(fit(data, config), ConfigError);
  config = cce_config(0, 0.1);
  CHECK_THROWS_AS(fit(data, config), ConfigError);
  config = cce_config(5, 0.1);
  config.n_classes = 3;
  CHECK_THROWS_AS(fit(data, config), DataError);
  const auto single = fixture::table({{1.0}, {2.0}}, {0, 0}, 1);
  CHECK_THROWS_AS(fit(single, cce_config(1, 0.1)), DataError);
}
