#pragma once

// Verifier-guided step-wise beam search.
//
// Each iteration expands every plan-so-far in a beam of size K with N next-step
// candidates drawn from a mix of decoding methods, scores every extension with
//
//   v(s_<=t) = alpha * loglik(s_<=t) / tokens(s_<=t) + (1 - alpha) * ln clamp(validity(s_t), eps, 1)
//
// keeps the K best, moves completed plans to a finished pool and stops once K
// plans have finished (or nothing is left to expand, or max_steps is reached).
// A plan completes when the proposer emits its end-of-plan candidate, whose
// log-probability and token count are added to the plan's likelihood; the
// verifier term of a completed plan is that of its last real step.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stepplan/plan.hpp"
#include "stepplan/scorer.hpp"

namespace stepplan {

struct MethodAllocation {
  DecodingMethod method;
  int count = 1;

  friend bool operator==(const MethodAllocation&, const MethodAllocation&) = default;
};

struct DecodeParams {
  double alpha = 0.75;
  int beam_k = 5;
  int candidates_n = 10;
  std::vector<MethodAllocation> method_mix;
  int max_steps = 20;
  double epsilon = 1e-6;
  std::uint64_t seed = 0;
  /// Off by default: use the sum of all verifier log-scores instead of only
  /// the current step's.
  bool accumulate_verifier = false;

  /// K=5, N=10 split as 5 beam + 5 nucleus (top_p 0.9, temperature 1.0).
  static DecodeParams defaults();
  /// A mix of a single method producing all N candidates.
  static std::vector<MethodAllocation> single_method(const DecodingMethod& method, int n);

  void validate() const;

  nlohmann::json to_json() const;
  /// Missing fields keep their defaults; unknown fields are rejected.
  static DecodeParams from_json(const nlohmann::json& doc);
};

struct Hypothesis {
  std::vector<std::string> steps;
  double loglik_sum = 0.0;
  int token_count = 0;
  std::vector<double> verifier_log_scores;  // ln clamp(validity), one per step
  double value = 0.0;
  bool complete = false;
  std::vector<int> lineage;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct TraceEvent {
  std::string kind;  // "dedup" | "prune"
  std::vector<int> parent_lineage;
  std::string text;
  std::string reason;
};

struct TraceIteration {
  int iteration = 0;
  std::vector<std::vector<int>> beam;  // lineages expanded this iteration
  std::vector<Hypothesis> pool;
  std::vector<std::vector<int>> selected;  // top-K in rank order
  std::vector<std::vector<int>> finished;  // selected hypotheses that completed
  std::vector<TraceEvent> events;
};

struct DecodeTrace {
  std::vector<TraceIteration> iterations;
  std::string stop_reason;  // "finished" | "exhausted" | "max_steps" | "error"
  std::uint64_t proposer_calls = 0;
  std::uint64_t likelihood_calls = 0;
  std::uint64_t verifier_calls = 0;
};

struct DecodeResult {
  Plan plan;  // terminal iff a completed hypothesis was returned
  Hypothesis best;
  std::vector<Hypothesis> finished;  // by descending value
  DecodeTrace trace;
};

/// Scorer failure during decoding; carries the hypothesis being scored and
/// the trace up to the failing iteration.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::vector<std::string> hypothesis, DecodeTrace trace)
      : std::runtime_error(what), hypothesis_(std::move(hypothesis)), trace_(std::move(trace)) {}
  const std::vector<std::string>& hypothesis() const noexcept { return hypothesis_; }
  const DecodeTrace& trace() const noexcept { return trace_; }

 private:
  std::vector<std::string> hypothesis_;
  DecodeTrace trace_;
};

/// ln(clamp(validity, epsilon, 1)).
double verifier_log_score(double validity, double epsilon);

/// Value of a hypothesis with at least one step and one token.
double value(const Hypothesis& hyp, double alpha, bool accumulate_verifier = false);

/// Strict ranking: higher value first, then shorter lineage, then
/// lexicographically smaller lineage.
bool ranks_before(const Hypothesis& a, const Hypothesis& b);

struct ExpandResult {
  std::vector<Hypothesis> pool;
  std::vector<TraceEvent> events;
};

/// Expands every (incomplete) beam member with the proposer once per method in
/// the mix, then scores each extension. Duplicate extensions are merged,
/// keeping the first in lineage order.
ExpandResult expand(const std::vector<Hypothesis>& beam, const PlanningInstance& instance,
                    const ScorerBundle& bundle, const DecodeParams& params);

struct Selection {
  std::vector<Hypothesis> ranked;    // top-k in rank order
  std::vector<Hypothesis> beam;      // incomplete members of ranked
  std::vector<Hypothesis> finished;  // complete members of ranked
};

Selection select_top_k(std::vector<Hypothesis> pool, int k);

/// Recomputes the selection recorded in a trace iteration from its pool.
std::vector<std::vector<int>> replay_selection(const TraceIteration& iteration, int k);

DecodeResult decode(const PlanningInstance& instance, const ScorerBundle& bundle, const DecodeParams& params);

struct BatchItem {
  std::optional<DecodeResult> result;
  std::string error;  // set iff result is empty
};

/// Decodes instances on up to `parallelism` worker threads; output order and
/// content match sequential decoding.
std::vector<BatchItem> decode_batch(const std::vector<PlanningInstance>& instances, const ScorerBundle& bundle,
                                    const DecodeParams& params, int parallelism);

nlohmann::json to_json(const Hypothesis& hyp);
nlohmann::json to_json(const TraceIteration& iteration);
/// One record per iteration, followed by a summary record.
std::vector<nlohmann::json> trace_records(const DecodeTrace& trace, const std::string& instance_id);
nlohmann::json result_record(const PlanningInstance& instance, const DecodeResult& result);

}  // namespace stepplan
