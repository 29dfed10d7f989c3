#pragma once

// Positive and pseudo-negative (plan-so-far, next-step) pairs for training a
// step verifier from gold plans. Every negative localizes one error family at
// the candidate step (1-based positions, T = plan length):
//
//   repeat-near      (s_<t, s_{t-1})                  t >= 2
//   repeat-distant   (s_<t, s_j)                      t >= 3, j <= t-2
//   missing          (s_<t, s_t')                     t' >= t+2
//   reorder-near     (s_<=t with s_{t-1}<->s_t, s_{t+1})   t >= 2, t+1 <= T
//   reorder-distant  (s_<t with s_i<->s_j, s_t)       j >= i+2, j < t
//
// Eligible positions are sampled uniformly without replacement under a seed;
// any negative whose text equals a positive pair of the same plan is dropped.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stepplan/plan.hpp"

namespace stepplan {

enum class PerturbationKind { reorder_near, reorder_distant, repeat_near, repeat_distant, missing };

inline constexpr PerturbationKind kAllPerturbations[] = {
    PerturbationKind::reorder_near, PerturbationKind::reorder_distant, PerturbationKind::repeat_near,
    PerturbationKind::repeat_distant, PerturbationKind::missing};

std::string_view to_string(PerturbationKind kind);
PerturbationKind perturbation_from_string(std::string_view text);

enum class PairLabel { valid, invalid };

struct VerifierExample {
  Goal goal;
  std::vector<std::string> prefix;
  std::string candidate;
  PairLabel label = PairLabel::valid;
  std::optional<PerturbationKind> kind;
  std::string source_plan_id;

  /// Positions the pair was built from (1-based; see header comment). Not
  /// exported; kept for auditing eligibility.
  std::vector<int> positions;
};

std::vector<VerifierExample> positives(const Plan& plan, const Goal& goal);

/// Throws ValidationError if per_kind <= 0.
std::vector<VerifierExample> negatives(const Plan& plan, const Goal& goal, const std::vector<PerturbationKind>& kinds,
                                       int per_kind, std::uint64_t seed);

struct GoldPlan {
  Goal goal;
  Plan plan;
};

struct DatasetConfig {
  std::vector<PerturbationKind> kinds{std::begin(kAllPerturbations), std::end(kAllPerturbations)};
  /// 0 requests no negatives.
  int per_kind = 2;
  std::uint64_t seed = 0;
  /// Reference scale: 47k pairs from 3k plans.
  double target_pairs_per_plan = 47000.0 / 3000.0;
};

struct DatasetManifest {
  std::size_t plans = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::map<std::string, std::size_t> per_kind;
  std::uint64_t seed = 0;
  int per_kind_requested = 0;
  double target_pairs = 0.0;

  std::size_t total() const noexcept { return positives + negatives; }
  /// positives / negatives, or "no-negatives".
  nlohmann::json ratio() const;
  nlohmann::json to_json() const;
};

struct Dataset {
  std::vector<VerifierExample> examples;
  DatasetManifest manifest;
};

/// Per plan: positives, then negatives by kind order; plans in input order.
/// Plan i uses seed mix_seed(config.seed, i).
Dataset build_dataset(const std::vector<GoldPlan>& plans, const DatasetConfig& config);

nlohmann::json to_json(const VerifierExample& example);

}  // namespace stepplan
