#include "stepplan/verifier_data.hpp"

#include <algorithm>
#include <set>

#include "stepplan/error.hpp"
#include "stepplan/rng.hpp"

namespace stepplan {
namespace {

using Texts = std::vector<std::string>;

struct Candidate {
  Texts prefix;
  std::string candidate;
  std::vector<int> positions;
};

// s is 0-based storage; all positions below are 1-based.
Texts head(const Texts& s, int count) { return Texts(s.begin(), s.begin() + count); }

std::vector<Candidate> eligible(const Texts& s, PerturbationKind kind) {
  const int T = static_cast<int>(s.size());
  std::vector<Candidate> out;
  switch (kind) {
    case PerturbationKind::repeat_near:
      for (int t = 2; t <= T; ++t) out.push_back({head(s, t - 1), s[t - 2], {t, t - 1}});
      break;
    case PerturbationKind::repeat_distant:
      for (int t = 3; t <= T; ++t)
        for (int j = 1; j <= t - 2; ++j) out.push_back({head(s, t - 1), s[j - 1], {t, j}});
      break;
    case PerturbationKind::missing:
      for (int t = 1; t <= T; ++t)
        for (int tp = t + 2; tp <= T; ++tp) out.push_back({head(s, t - 1), s[tp - 1], {t, tp}});
      break;
    case PerturbationKind::reorder_near:
      for (int t = 2; t + 1 <= T; ++t) {
        Texts prefix = head(s, t);
        std::swap(prefix[t - 2], prefix[t - 1]);
        out.push_back({std::move(prefix), s[t], {t - 1, t, t + 1}});
      }
      break;
    case PerturbationKind::reorder_distant:
      for (int t = 1; t <= T; ++t)
        for (int i = 1; i <= t - 1; ++i)
          for (int j = i + 2; j < t; ++j) {
            Texts prefix = head(s, t - 1);
            std::swap(prefix[i - 1], prefix[j - 1]);
            out.push_back({std::move(prefix), s[t - 1], {i, j, t}});
          }
      break;
  }
  return out;
}

std::string pair_key(const Texts& prefix, const std::string& candidate) {
  std::string key;
  for (const auto& p : prefix) {
    key += p;
    key += '\x1f';
  }
  key += '\x1e';
  key += candidate;
  return key;
}

}  // namespace

std::string_view to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::reorder_near: return "reorder-near";
    case PerturbationKind::reorder_distant: return "reorder-distant";
    case PerturbationKind::repeat_near: return "repeat-near";
    case PerturbationKind::repeat_distant: return "repeat-distant";
    case PerturbationKind::missing: return "missing";
  }
  return "missing";
}

PerturbationKind perturbation_from_string(std::string_view text) {
  for (auto k : kAllPerturbations)
    if (to_string(k) == text) return k;
  throw ValidationError("unknown perturbation kind \"" + std::string(text) + "\"");
}

std::vector<VerifierExample> positives(const Plan& plan, const Goal& goal) {
  const Texts s = plan.texts();
  std::vector<VerifierExample> out;
  out.reserve(s.size());
  for (std::size_t t = 1; t <= s.size(); ++t) {
    VerifierExample ex;
    ex.goal = goal;
    ex.prefix = head(s, static_cast<int>(t) - 1);
    ex.candidate = s[t - 1];
    ex.label = PairLabel::valid;
    ex.source_plan_id = goal.id;
    ex.positions = {static_cast<int>(t)};
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<VerifierExample> negatives(const Plan& plan, const Goal& goal, const std::vector<PerturbationKind>& kinds,
                                       int per_kind, std::uint64_t seed) {
  if (per_kind <= 0) throw ValidationError("per_kind must be positive");
  const Texts s = plan.texts();

  std::set<std::string> valid;
  for (std::size_t t = 0; t < s.size(); ++t) valid.insert(pair_key(head(s, static_cast<int>(t)), s[t]));

  std::vector<VerifierExample> out;
  for (auto kind : kinds) {
    auto pool = eligible(s, kind);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(kind)));
    const std::size_t take = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(per_kind));
    // Partial Fisher-Yates: the first `take` slots become the sample.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      auto& c = pool[i];
      if (valid.count(pair_key(c.prefix, c.candidate))) continue;
      VerifierExample ex;
      ex.goal = goal;
      ex.prefix = std::move(c.prefix);
      ex.candidate = std::move(c.candidate);
      ex.label = PairLabel::invalid;
      ex.kind = kind;
      ex.source_plan_id = goal.id;
      ex.positions = std::move(c.positions);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

nlohmann::json DatasetManifest::ratio() const {
  if (negatives == 0) return "no-negatives";
  return static_cast<double>(positives) / static_cast<double>(negatives);
}

nlohmann::json DatasetManifest::to_json() const {
  return {{"plans", plans},
          {"total", total()},
          {"labels", {{"valid", positives}, {"invalid", negatives}}},
          {"kinds", per_kind},
          {"positives_to_negatives", ratio()},
          {"seed", seed},
          {"per_kind", per_kind_requested},
          {"target_pairs", target_pairs}};
}

Dataset build_dataset(const std::vector<GoldPlan>& plans, const DatasetConfig& config) {
  if (plans.empty()) throw ValidationError("build_dataset needs at least one plan");
  if (config.per_kind < 0) throw ValidationError("per_kind must be >= 0");
  Dataset ds;
  auto& m = ds.manifest;
  m.plans = plans.size();
  m.seed = config.seed;
  m.per_kind_requested = config.per_kind;
  m.target_pairs = config.target_pairs_per_plan * static_cast<double>(plans.size());
  for (auto k : config.kinds) m.per_kind[std::string(to_string(k))] = 0;

  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& gp = plans[i];
    for (auto& ex : positives(gp.plan, gp.goal)) {
      ds.examples.push_back(std::move(ex));
      ++m.positives;
    }
    if (config.per_kind == 0 || config.kinds.empty()) continue;
    for (auto& ex : negatives(gp.plan, gp.goal, config.kinds, config.per_kind, mix_seed(config.seed, i))) {
      ++m.per_kind[std::string(to_string(*ex.kind))];
      ++m.negatives;
      ds.examples.push_back(std::move(ex));
    }
  }
  return ds;
}

nlohmann::json to_json(const VerifierExample& ex) {
  nlohmann::json out = {{"goal", ex.goal.text},
                        {"prefix", ex.prefix},
                        {"candidate", ex.candidate},
                        {"label", ex.label == PairLabel::valid ? "valid" : "invalid"}};
  if (ex.kind) out["kind"] = to_string(*ex.kind);
  out["source_plan_id"] = ex.source_plan_id;
  return out;
}

}  // namespace stepplan
