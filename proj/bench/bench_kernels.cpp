// Serial reference kernels against the OpenMP versions.
#include <benchmark/benchmark.h>

#include "halluc/dino_heal.hpp"
#include "halluc/pair_miner.hpp"
#include "support.hpp"

using namespace halluc;

namespace {

const testsupport::PlantedCorpus& corpus(std::size_t videos) {
  static std::map<std::size_t, testsupport::PlantedCorpus> cache;
  auto it = cache.find(videos);
  if (it == cache.end()) it = cache.emplace(videos, testsupport::planted_corpus(1, videos, 10, 4, 8, 256)).first;
  return it->second;
}

template <bool Parallel>
void BM_MinePairs(benchmark::State& state) {
  const auto& c = corpus(static_cast<std::size_t>(state.range(0)));
  const auto clips = c.records();
  for (auto _ : state) {
    auto pairs = Parallel ? mine_pairs(clips, c.sem, c.vis, MinerConfig{}, ScanMode::kCrossVideo)
                          : serial::mine_pairs(clips, c.sem, c.vis, MinerConfig{}, ScanMode::kCrossVideo);
    benchmark::DoNotOptimize(pairs);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(clips.size() * clips.size() / 2));
}

// ViT-S/14 style frame: 6 heads, 16x16 patches + CLS, 64x64 feature grid.
struct Frame {
  AttentionTensor attention;
  FeatureGrid features;
};

const Frame& frame(std::size_t side) {
  static std::map<std::size_t, Frame> cache;
  auto it = cache.find(side);
  if (it == cache.end()) {
    testsupport::Gen g(2);
    it = cache.emplace(side, Frame{testsupport::random_attention(g, 6, side * side + 1),
                                   testsupport::random_features(g, 64, 64, 32)})
             .first;
  }
  return it->second;
}

template <bool Parallel>
void BM_HeadAverage(benchmark::State& state) {
  const auto& f = frame(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto m = Parallel ? heal::head_average(f.attention) : heal::serial::head_average(f.attention);
    benchmark::DoNotOptimize(m);
  }
}

template <bool Parallel>
void BM_Upsample(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  testsupport::Gen g(3);
  heal::SaliencyGrid grid{side, side, {}};
  for (std::size_t i = 0; i < side * side; ++i) grid.values.push_back(g.uniform());
  for (auto _ : state) {
    auto up = Parallel ? heal::upsample(grid, 256, 256, heal::Interp::kBilinear)
                       : heal::serial::upsample(grid, 256, 256, heal::Interp::kBilinear);
    benchmark::DoNotOptimize(up);
  }
}

template <bool Parallel>
void BM_Reweight(benchmark::State& state) {
  const auto& f = frame(16);
  std::vector<double> w(f.features.positions(), 0.6);
  for (auto _ : state) {
    auto r = Parallel ? heal::reweight(f.features, w) : heal::serial::reweight(f.features, w);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Parallel>
void BM_Heal(benchmark::State& state) {
  const auto& f = frame(static_cast<std::size_t>(state.range(0)));
  const heal::HealConfig cfg;
  for (auto _ : state) {
    auto r = Parallel ? heal::heal(f.features, f.attention, std::nullopt, cfg)
                      : heal::serial::heal(f.features, f.attention, std::nullopt, cfg);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK(BM_MinePairs<false>)->Name("mine_pairs/serial")->Arg(20)->Arg(80);
BENCHMARK(BM_MinePairs<true>)->Name("mine_pairs/omp")->Arg(20)->Arg(80);
BENCHMARK(BM_HeadAverage<false>)->Name("head_average/serial")->Arg(16)->Arg(32);
BENCHMARK(BM_HeadAverage<true>)->Name("head_average/omp")->Arg(16)->Arg(32);
BENCHMARK(BM_Upsample<false>)->Name("upsample/serial")->Arg(16)->Arg(32);
BENCHMARK(BM_Upsample<true>)->Name("upsample/omp")->Arg(16)->Arg(32);
BENCHMARK(BM_Reweight<false>)->Name("reweight/serial");
BENCHMARK(BM_Reweight<true>)->Name("reweight/omp");
BENCHMARK(BM_Heal<false>)->Name("heal/serial")->Arg(16)->Arg(32);
BENCHMARK(BM_Heal<true>)->Name("heal/omp")->Arg(16)->Arg(32);

BENCHMARK_MAIN();
