#include <benchmark/benchmark.h>

#include "stepplan/curation.hpp"
#include "stepplan/embodied.hpp"
#include "stepplan/rng.hpp"
#include "stepplan/verifier_data.hpp"

using namespace stepplan;

namespace {

std::vector<GoldPlan> synthetic_plans(std::size_t count) {
  Rng rng(5);
  std::vector<GoldPlan> plans;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::string> steps;
    const auto len = 2 + rng.below(9);
    for (std::uint64_t s = 0; s < len; ++s) steps.push_back("plan " + std::to_string(i) + " step " + std::to_string(s));
    plans.push_back({Goal{"goal " + std::to_string(i), std::to_string(i)}, Plan::from_texts(steps, true)});
  }
  return plans;
}

void BM_BuildDataset(benchmark::State& state) {
  const auto plans = synthetic_plans(static_cast<std::size_t>(state.range(0)));
  DatasetConfig cfg;
  cfg.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(build_dataset(plans, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildDataset)->Arg(300)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_Curate(benchmark::State& state) {
  Rng rng(9);
  std::vector<CurationRecord> recs(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].id = std::to_string(i);
    recs[i].tuple_kind = static_cast<TupleKind>(i % 3);
    recs[i].critic_score = rng.unit();
  }
  const ThresholdPolicy policy;
  for (auto _ : state) benchmark::DoNotOptimize(curate(recs, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Curate)->Arg(1000)->Arg(100000);

void BM_LcsScore(benchmark::State& state) {
  const std::vector<Action> alphabet = {Action::parse("Walk(tv)"), Action::parse("Grab(cup)"),
                                        Action::parse("Open(fridge)"), Action::parse("Sit(sofa)")};
  Rng rng(2);
  ActionProgram a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& x : a) x = alphabet[rng.below(alphabet.size())];
  for (auto& x : b) x = alphabet[rng.below(alphabet.size())];
  for (auto _ : state) benchmark::DoNotOptimize(lcs_score(a, b));
}
BENCHMARK(BM_LcsScore)->Arg(10)->Arg(100);

void BM_TranslateStep(benchmark::State& state) {
  const auto env = MiniEnv::load(STEPPLAN_DATA_DIR "/env/household.json");
  const auto vocab = ActionVocab::ground(env);
  const TokenBagEmbedder emb;
  for (auto _ : state) benchmark::DoNotOptimize(translate_step("pour the milk into the cup", vocab, emb));
  state.counters["vocab"] = static_cast<double>(vocab.size());
}
BENCHMARK(BM_TranslateStep);

}  // namespace
