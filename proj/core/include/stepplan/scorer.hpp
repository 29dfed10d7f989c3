#pragma once

// Model-facing contracts used by the decoder and the data tools. A bundle is
// just four shared, immutable scorers; every call must be pure given its
// inputs (including any seed) and safe to invoke from several threads.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stepplan/plan.hpp"

namespace stepplan {

enum class MethodKind { greedy, beam, nucleus };

std::string_view to_string(MethodKind kind);
MethodKind method_kind_from_string(std::string_view text);

struct DecodingMethod {
  MethodKind kind = MethodKind::greedy;
  std::optional<int> beam_width;      // beam only
  std::optional<double> top_p;        // nucleus only, in (0, 1]
  std::optional<double> temperature;  // nucleus only, > 0
  std::uint64_t seed = 0;

  static DecodingMethod greedy(std::uint64_t seed = 0);
  static DecodingMethod beam(int width, std::uint64_t seed = 0);
  static DecodingMethod nucleus(double top_p, double temperature = 1.0, std::uint64_t seed = 0);

  /// Throws ValidationError when parameters do not match the kind.
  void validate() const;

  friend bool operator==(const DecodingMethod&, const DecodingMethod&) = default;
};

struct StepCandidate {
  std::string text;           // empty for the end-of-plan candidate
  double logprob_sum = 0.0;   // natural log, <= 0
  int token_count = 1;
  bool terminal = false;

  friend bool operator==(const StepCandidate&, const StepCandidate&) = default;
};

struct Likelihood {
  double logprob_sum = 0.0;
  int token_count = 0;

  friend bool operator==(const Likelihood&, const Likelihood&) = default;
};

/// Sampling parameters for free-form completion (teacher-side generation).
struct SamplingParams {
  double top_p = 0.98;
  double temperature = 0.9;
  int max_tokens = 256;
  std::uint64_t seed = 0;
};

class Proposer {
 public:
  virtual ~Proposer() = default;
  /// Returns at most n next-step candidates for the plan-so-far.
  virtual std::vector<StepCandidate> propose(const PlanningInstance& instance,
                                             const std::vector<std::string>& prefix, int n,
                                             const DecodingMethod& method) const = 0;
};

class LikelihoodModel {
 public:
  virtual ~LikelihoodModel() = default;
  virtual Likelihood loglik(const PlanningInstance& instance, const std::vector<std::string>& steps) const = 0;
};

class Verifier {
 public:
  virtual ~Verifier() = default;
  /// Validity of `candidate` as the next step, in [0, 1].
  virtual double verify(const Goal& goal, const std::vector<std::string>& prefix,
                        const std::string& candidate) const = 0;
};

class CompletionModel {
 public:
  virtual ~CompletionModel() = default;
  virtual std::string complete(const std::string& prompt, const SamplingParams& params) const = 0;
};

struct ScorerBundle {
  std::shared_ptr<const Proposer> proposer;
  std::shared_ptr<const LikelihoodModel> likelihood;
  std::shared_ptr<const Verifier> verifier;
  std::shared_ptr<const CompletionModel> completion;
};

/// Verifier decorator that counts invocations.
class CountingVerifier final : public Verifier {
 public:
  explicit CountingVerifier(std::shared_ptr<const Verifier> inner) : inner_(std::move(inner)) {}

  double verify(const Goal& goal, const std::vector<std::string>& prefix,
                const std::string& candidate) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_->verify(goal, prefix, candidate);
  }

  std::uint64_t calls() const noexcept { return calls_.load(std::memory_order_relaxed); }

 private:
  std::shared_ptr<const Verifier> inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace stepplan
