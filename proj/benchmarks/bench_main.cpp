#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "rgbdt/booster.hpp"
#include "rgbdt/loss.hpp"
#include "rgbdt/random.hpp"
#include "rgbdt/synthetic.hpp"
#include "rgbdt/tree.hpp"

namespace {

void BM_GradHess(benchmark::State& state) {
  const auto family = static_cast<rgbdt::LossFamily>(state.range(0));
  rgbdt::LossSpec spec;
  spec.family = family;
  const rgbdt::Loss loss(spec);
  rgbdt::Rng rng(7);
  std::vector<double> z(4096);
  for (auto& v : z) v = 8.0 * rng.uniform() - 4.0;
  for (auto _ : state) {
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const auto gh = loss.grad_hess(static_cast<int>(i & 1), z[i]);
      acc += gh.g + gh.h;
    }
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(z.size()));
  state.SetLabel(std::string(rgbdt::to_string(family)));
}
BENCHMARK(BM_GradHess)->DenseRange(0, 6);

void BM_GrowTree(benchmark::State& state) {
  rgbdt::synthetic::ImbalancedOptions o;
  o.n = static_cast<std::size_t>(state.range(0));
  const auto data = rgbdt::synthetic::imbalanced(o, 3);
  rgbdt::Rng rng(11);
  std::vector<rgbdt::GradHessPair> gh(data.n_samples());
  for (auto& p : gh) p = {rng.uniform() - 0.5, 0.25 * rng.uniform() + 0.01};
  std::vector<std::uint32_t> all(data.n_samples());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  const rgbdt::TreeConfig cfg;
  for (auto _ : state) {
    auto tree = rgbdt::grow_tree(data, all, gh, cfg);
    benchmark::DoNotOptimize(tree);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GrowTree)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_Fit(benchmark::State& state) {
  const auto data = rgbdt::synthetic::imbalanced({}, 5);
  rgbdt::BoosterConfig cfg;
  cfg.n_rounds = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto model = rgbdt::fit(data, cfg);
    benchmark::DoNotOptimize(model);
  }
}
BENCHMARK(BM_Fit)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
