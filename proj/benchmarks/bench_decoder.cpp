#include <benchmark/benchmark.h>

#include <memory>

#include "stepplan/decoder.hpp"
#include "stepplan/mock_world.hpp"
#include "stepplan/rng.hpp"

using namespace stepplan;

namespace {

// A complete tree: every internal node has `branching` children, and every
// node below the root keeps some end-of-plan mass.
std::shared_ptr<const MockWorld> full_tree(int depth, int branching, std::uint64_t seed) {
  auto w = std::make_shared<MockWorld>();
  Rng rng(seed);
  std::vector<std::vector<std::string>> frontier{{}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::vector<std::string>> next;
    for (const auto& path : frontier) {
      std::vector<double> weights(static_cast<std::size_t>(branching));
      double total = d == 0 ? 0.0 : 0.2;
      for (auto& x : weights) total += (x = 0.1 + rng.unit());
      for (int i = 0; i < branching; ++i) {
        const std::string text = "d" + std::to_string(d) + " option " + std::to_string(i) + " after " +
                                 std::to_string(next.size());
        w->add(path, text, weights[static_cast<std::size_t>(i)] / total, rng.unit());
        auto child = path;
        child.push_back(text);
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  return w;
}

PlanningInstance goal() {
  PlanningInstance in;
  in.goal = Goal{"benchmark goal", "b"};
  return in;
}

void BM_DecodeDefaultMix(benchmark::State& state) {
  const auto world = full_tree(static_cast<int>(state.range(0)), 4, 11);
  const auto bundle = mock_bundle(world);
  DecodeParams p = DecodeParams::defaults();
  p.alpha = state.range(1) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(decode(goal(), bundle, p));
  state.counters["nodes"] = static_cast<double>(world->size());
}
BENCHMARK(BM_DecodeDefaultMix)->Args({4, 75})->Args({4, 100})->Args({6, 75})->Args({6, 100});

void BM_DecodeBeamWidth(benchmark::State& state) {
  const auto world = full_tree(5, 4, 12);
  const auto bundle = mock_bundle(world);
  DecodeParams p = DecodeParams::defaults();
  p.beam_k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(decode(goal(), bundle, p));
}
BENCHMARK(BM_DecodeBeamWidth)->Arg(1)->Arg(5)->Arg(20);

void BM_DecodeBatch(benchmark::State& state) {
  const auto world = full_tree(5, 4, 13);
  const auto bundle = mock_bundle(world);
  const std::vector<PlanningInstance> batch(64, goal());
  const DecodeParams p = DecodeParams::defaults();
  for (auto _ : state) benchmark::DoNotOptimize(decode_batch(batch, bundle, p, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_DecodeBatch)->Arg(1)->Arg(4)->Arg(8)->UseRealTime();

void BM_MockProposeNucleus(benchmark::State& state) {
  const auto world = full_tree(2, static_cast<int>(state.range(0)), 14);
  std::uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(mock_propose(*world, {}, 10, DecodingMethod::nucleus(0.9, 1.0, ++seed)));
}
BENCHMARK(BM_MockProposeNucleus)->Arg(8)->Arg(64);

}  // namespace
