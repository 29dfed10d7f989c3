#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "stepplan/decoder.hpp"
#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"
#include "stepplan/mock_world.hpp"
#include "stepplan/rng.hpp"

using namespace stepplan;

namespace {

PlanningInstance goal(const std::string& g) {
  PlanningInstance in;
  in.goal.text = g;
  return in;
}

Hypothesis hyp(double loglik, int tokens, double validity, std::vector<int> lineage = {0}) {
  Hypothesis h;
  h.steps = {"s"};
  h.loglik_sum = loglik;
  h.token_count = tokens;
  h.verifier_log_scores = {std::log(validity)};
  h.lineage = std::move(lineage);
  return h;
}

Hypothesis valued(double v, std::vector<int> lineage) {
  Hypothesis h;
  h.steps = {"s" + std::to_string(lineage.back())};
  h.value = v;
  h.lineage = std::move(lineage);
  return h;
}

DecodeParams beam_params(int k, int n, double alpha = 0.75) {
  DecodeParams p = DecodeParams::defaults();
  p.alpha = alpha;
  p.beam_k = k;
  p.candidates_n = n;
  p.method_mix = DecodeParams::single_method(DecodingMethod::beam(n), n);
  return p;
}

ScorerBundle bundle_of(MockWorld w) { return mock_bundle(std::make_shared<const MockWorld>(std::move(w))); }

}  // namespace

TEST(Value, AlphaOneIgnoresVerifier) {
  EXPECT_DOUBLE_EQ(value(hyp(-1.0, 2, 1e-9), 1.0), -0.5);
  EXPECT_DOUBLE_EQ(value(hyp(-1.0, 2, 0.7), 1.0), -0.5);
}

TEST(Value, AlphaZeroWithCertainValidityIsZero) {
  EXPECT_DOUBLE_EQ(value(hyp(-17.0, 3, 1.0), 0.0), 0.0);
}

TEST(Value, MixedExample) {
  EXPECT_NEAR(value(hyp(-1.0, 1, 0.5), 0.75), -0.923287, 1e-6);
}

TEST(Value, AccumulatedVerifierSumsAllSteps) {
  Hypothesis h = hyp(-1.0, 2, 0.5);
  h.verifier_log_scores = {std::log(0.5), std::log(0.25)};
  EXPECT_NEAR(value(h, 0.5, false), 0.5 * -0.5 + 0.5 * std::log(0.25), 1e-12);
  EXPECT_NEAR(value(h, 0.5, true), 0.5 * -0.5 + 0.5 * std::log(0.125), 1e-12);
}

TEST(Value, VerifierScoreIsClamped) {
  EXPECT_DOUBLE_EQ(verifier_log_score(0.0, 1e-6), std::log(1e-6));
  EXPECT_DOUBLE_EQ(verifier_log_score(1.0, 1e-6), 0.0);
}

TEST(Expand, GreedyTwoOverTwoChildren) {
  MockWorld w;
  w.add({}, "a", 0.6, 0.9);
  w.add({}, "b", 0.4, 0.9);
  auto p = beam_params(1, 2);
  p.method_mix = DecodeParams::single_method(DecodingMethod::greedy(), 2);
  const auto r = expand({Hypothesis{}}, goal("g"), bundle_of(w), p);
  ASSERT_EQ(r.pool.size(), 2u);
  EXPECT_EQ(r.pool[0].steps, (std::vector<std::string>{"a"}));
  EXPECT_EQ(r.pool[1].steps, (std::vector<std::string>{"b"}));
}

TEST(Expand, DuplicateBeamMembersGiveOneEntry) {
  MockWorld w;
  w.add({}, "a", 1.0, 0.9);
  auto p = beam_params(2, 1);
  Hypothesis h0;
  h0.lineage = {0};
  Hypothesis h1;
  h1.lineage = {1};
  const auto r = expand({h0, h1}, goal("g"), bundle_of(w), p);
  ASSERT_EQ(r.pool.size(), 1u);
  EXPECT_EQ(r.pool[0].lineage, (std::vector<int>{0, 0}));
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, "dedup");
}

TEST(Expand, NucleusResampleOfGreedyChildIsMerged) {
  // Node {a: 0.95, b: 0.05}: with top_p 0.9 the nucleus set is {a}, so the
  // nucleus draw always repeats the greedy choice, whatever the seed.
  MockWorld w;
  w.add({}, "a", 0.95, 0.9);
  w.add({}, "b", 0.05, 0.9);
  auto p = beam_params(1, 2);
  p.method_mix = {MethodAllocation{DecodingMethod::greedy(), 1}, MethodAllocation{DecodingMethod::nucleus(0.9), 1}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    p.seed = seed;
    const auto r = expand({Hypothesis{}}, goal("g"), bundle_of(w), p);
    ASSERT_EQ(r.pool.size(), 1u);
    EXPECT_EQ(r.pool[0].steps, (std::vector<std::string>{"a"}));
  }
  // Over {a: 0.5, b: 0.5} with top_p 1.0 the nucleus draw is a or b; the
  // pool size follows whichever it drew, as predicted by the proposer alone.
  MockWorld v;
  v.add({}, "a", 0.5, 0.9);
  v.add({}, "b", 0.5, 0.9);
  p.method_mix = {MethodAllocation{DecodingMethod::greedy(), 1}, MethodAllocation{DecodingMethod::nucleus(1.0), 1}};
  int merged = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    p.seed = seed;
    auto m = DecodingMethod::nucleus(1.0);
    m.seed = mix_seed(seed, 1);
    const bool repeats = mock_propose(v, {}, 1, m)[0].text == "a";
    const auto r = expand({Hypothesis{}}, goal("g"), bundle_of(v), p);
    EXPECT_EQ(r.pool.size(), repeats ? 1u : 2u);
    merged += repeats;
  }
  EXPECT_GT(merged, 0);
  EXPECT_LT(merged, 40);
}

TEST(Expand, EndOfPlanOnEmptyPrefixIsPruned) {
  MockWorld w;
  w.add({}, "a", 0.5, 0.9);
  const auto r = expand({Hypothesis{}}, goal("g"), bundle_of(w), beam_params(2, 2));
  ASSERT_EQ(r.pool.size(), 1u);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, "prune");
}

TEST(Select, TopKByValue) {
  const auto s = select_top_k({valued(-0.3, {2}), valued(-0.1, {0}), valued(-0.2, {1})}, 2);
  ASSERT_EQ(s.ranked.size(), 2u);
  EXPECT_EQ(s.ranked[0].value, -0.1);
  EXPECT_EQ(s.ranked[1].value, -0.2);
}

TEST(Select, TieBreaksOnLineage) {
  const auto s = select_top_k({valued(-1.0, {0, 1}), valued(-1.0, {0, 0})}, 1);
  ASSERT_EQ(s.ranked.size(), 1u);
  EXPECT_EQ(s.ranked[0].lineage, (std::vector<int>{0, 0}));
  EXPECT_TRUE(ranks_before(valued(-1.0, {3}), valued(-1.0, {0, 0})));
}

TEST(Select, ShortPool) {
  const auto s = select_top_k({valued(-1.0, {0})}, 5);
  EXPECT_EQ(s.ranked.size(), 1u);
}

TEST(Select, SplitsCompleteFromOpen) {
  auto a = valued(-0.1, {0});
  a.complete = true;
  const auto s = select_top_k({a, valued(-0.2, {1})}, 2);
  EXPECT_EQ(s.finished.size(), 1u);
  EXPECT_EQ(s.beam.size(), 1u);
}

TEST(Decode, SinglePathWorld) {
  const auto w = MockWorld::load(STEPPLAN_DATA_DIR "/worlds/chain3.json");
  const auto r = decode(goal("walk the dog"), bundle_of(w), DecodeParams::defaults());
  EXPECT_TRUE(r.plan.terminal);
  EXPECT_EQ(r.plan.texts(),
            (std::vector<std::string>{"find a leash", "put the leash on the dog", "walk the dog around the block"}));
  EXPECT_EQ(r.trace.stop_reason, "exhausted");
}

TEST(Decode, GoalRestatementCompletes) {
  MockWorld w;
  w.add({}, "call the walker", 1.0, 0.9);
  w.add({"call the walker"}, "Hire  a dog walker", 0.5, 0.9);
  w.add({"call the walker"}, "something else", 0.5, 0.9);
  w.add({"call the walker", "something else"}, "and more", 1.0, 0.9);
  auto p = beam_params(1, 3);
  const auto r = decode(goal("hire a dog walker"), bundle_of(w), p);
  EXPECT_TRUE(r.plan.terminal);
  EXPECT_EQ(r.plan.texts().back(), "Hire  a dog walker");
}

TEST(Decode, ReturnsBestIncompleteWhenNothingFinishes) {
  MockWorld w;
  std::vector<std::string> path;
  for (int i = 0; i < 6; ++i) {
    w.add(path, "step " + std::to_string(i), 1.0, 0.9);
    path.push_back("step " + std::to_string(i));
  }
  auto p = beam_params(2, 2);
  p.max_steps = 3;
  const auto r = decode(goal("g"), bundle_of(w), p);
  EXPECT_FALSE(r.plan.terminal);
  EXPECT_EQ(r.plan.size(), 3u);
  EXPECT_EQ(r.trace.stop_reason, "exhausted");
}

TEST(Decode, MatchesBruteForceWhenBeamCoversAllPlans) {
  for (std::uint32_t seed = 100; seed < 140; ++seed) {
    const auto w = oracle::random_world(seed, {4, 3, 60});
    const int leaves = static_cast<int>(oracle::count_complete(w));
    auto p = beam_params(leaves, oracle::max_children(w) + 1);
    p.max_steps = 4;
    const auto r = decode(goal("g"), bundle_of(w), p);
    const auto want = oracle::brute_force_best(w, p.alpha, p.epsilon);
    EXPECT_EQ(r.plan.texts(), want.steps) << "seed " << seed;
    EXPECT_NEAR(r.best.value, want.value, 1e-12);
  }
}

TEST(Decode, TraceReplaysAndValuesAreFinite) {
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    const auto w = oracle::random_world(seed);
    auto p = DecodeParams::defaults();
    p.seed = seed;
    const auto r = decode(goal("g"), bundle_of(w), p);
    for (const auto& it : r.trace.iterations) {
      EXPECT_EQ(replay_selection(it, p.beam_k), it.selected);
      for (const auto& h : it.pool) EXPECT_TRUE(std::isfinite(h.value));
      // Rank order is monotone in value.
      for (std::size_t i = 1; i < it.selected.size(); ++i) {
        auto find = [&](const std::vector<int>& l) {
          return std::find_if(it.pool.begin(), it.pool.end(), [&](const Hypothesis& h) { return h.lineage == l; });
        };
        EXPECT_GE(find(it.selected[i - 1])->value, find(it.selected[i])->value);
      }
    }
  }
}

TEST(Decode, AlphaOneNeverCallsVerifier) {
  const auto w = std::make_shared<const MockWorld>(oracle::random_world(9));
  auto b = mock_bundle(w);
  auto counting = std::make_shared<CountingVerifier>(b.verifier);
  b.verifier = counting;
  auto p = DecodeParams::defaults();
  p.alpha = 1.0;
  const auto r = decode(goal("g"), b, p);
  EXPECT_EQ(counting->calls(), 0u);
  EXPECT_EQ(r.trace.verifier_calls, 0u);
}

TEST(Decode, RescueFixture) {
  const auto w = MockWorld::load(STEPPLAN_DATA_DIR "/worlds/verifier_rescue.json");
  auto p = DecodeParams::defaults();
  const auto mixed = decode(goal("buy a used car"), bundle_of(w), p);
  EXPECT_EQ(mixed.plan.texts().back(), "pay for the car");
  p.alpha = 1.0;
  const auto lik_only = decode(goal("buy a used car"), bundle_of(w), p);
  EXPECT_EQ(lik_only.plan.texts().back(), "write a check");
}

TEST(Decode, ScorerFailureCarriesHypothesisAndTrace) {
  struct Broken final : LikelihoodModel {
    Likelihood loglik(const PlanningInstance&, const std::vector<std::string>& steps) const override {
      if (steps.size() >= 2) throw ScorerError("boom");
      return {-0.1, 1};
    }
  };
  const auto w = MockWorld::load(STEPPLAN_DATA_DIR "/worlds/chain3.json");
  auto b = bundle_of(w);
  b.likelihood = std::make_shared<Broken>();
  try {
    decode(goal("g"), b, DecodeParams::defaults());
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.hypothesis().size(), 2u);
    EXPECT_EQ(e.trace().stop_reason, "error");
    EXPECT_EQ(e.trace().iterations.size(), 1u);
  }
}

TEST(DecodeBatch, EmptyInput) {
  const auto w = MockWorld::load(STEPPLAN_DATA_DIR "/worlds/chain3.json");
  EXPECT_TRUE(decode_batch({}, bundle_of(w), DecodeParams::defaults(), 4).empty());
}

TEST(DecodeBatch, FailureIsIsolated) {
  const auto w = MockWorld::load(STEPPLAN_DATA_DIR "/worlds/chain3.json");
  PlanningInstance bad = goal("g");
  bad.kind = TaskKind::counterfactual_planning;  // missing condition
  const auto out = decode_batch({goal("a"), bad, goal("b")}, bundle_of(w), DecodeParams::defaults(), 3);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_TRUE(out[0].result);
  EXPECT_FALSE(out[1].result);
  EXPECT_NE(out[1].error.find("condition"), std::string::npos);
  EXPECT_TRUE(out[2].result);
}

TEST(DecodeParamsJson, RoundTripAndUnknownField) {
  auto p = DecodeParams::defaults();
  p.seed = 17;
  const auto back = DecodeParams::from_json(p.to_json());
  EXPECT_EQ(back.to_json(), p.to_json());
  EXPECT_THROW(DecodeParams::from_json({{"alhpa", 0.5}}), ValidationError);
  auto bad = DecodeParams::defaults();
  bad.candidates_n = 11;
  EXPECT_THROW(bad.validate(), ValidationError);
}
