#pragma once

// JSON bodies of the scorer wire protocol:
//   POST /v1/propose  {task, goal, condition?, initial_plan?, prefix_steps, n, method}
//                     -> {candidates: [{text, logprob_sum, token_count, terminal}]}
//   POST /v1/loglik   {task, goal, condition?, initial_plan?, steps} -> {logprob_sum, token_count}
//   POST /v1/verify   {goal, prefix_steps, candidate_step} -> {validity}
//   POST /v1/complete {prompt, max_tokens, top_p, temperature, seed} -> {text}
// Parsers throw ProtocolError carrying the offending field name.

#include <string>
#include <vector>

#include <json.hpp>

#include "stepplan/plan.hpp"
#include "stepplan/scorer.hpp"

namespace stepplan::wire {

inline constexpr const char* kProposePath = "/v1/propose";
inline constexpr const char* kLoglikPath = "/v1/loglik";
inline constexpr const char* kVerifyPath = "/v1/verify";
inline constexpr const char* kCompletePath = "/v1/complete";

struct ProposeRequest {
  PlanningInstance instance;
  std::vector<std::string> prefix;
  int n = 1;
  DecodingMethod method;
};

struct LoglikRequest {
  PlanningInstance instance;
  std::vector<std::string> steps;
};

struct VerifyRequest {
  Goal goal;
  std::vector<std::string> prefix;
  std::string candidate;
};

struct CompleteRequest {
  std::string prompt;
  SamplingParams params;
};

nlohmann::json encode_method(const DecodingMethod& method);
DecodingMethod decode_method(const nlohmann::json& body);

nlohmann::json encode(const ProposeRequest& request);
nlohmann::json encode(const LoglikRequest& request);
nlohmann::json encode(const VerifyRequest& request);
nlohmann::json encode(const CompleteRequest& request);

ProposeRequest decode_propose_request(const nlohmann::json& body);
LoglikRequest decode_loglik_request(const nlohmann::json& body);
VerifyRequest decode_verify_request(const nlohmann::json& body);
CompleteRequest decode_complete_request(const nlohmann::json& body);

nlohmann::json encode_candidates(const std::vector<StepCandidate>& candidates);
nlohmann::json encode_likelihood(const Likelihood& likelihood);
nlohmann::json encode_validity(double validity);
nlohmann::json encode_completion(const std::string& text);

/// Rejects more than `n` candidates, non-positive token counts and
/// non-finite or positive log-probabilities.
std::vector<StepCandidate> decode_candidates(const nlohmann::json& body, int n);
Likelihood decode_likelihood(const nlohmann::json& body);
/// Rejects validity outside [0, 1].
double decode_validity(const nlohmann::json& body);
std::string decode_completion(const nlohmann::json& body);

}  // namespace stepplan::wire
