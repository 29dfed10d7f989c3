#include "stepplan/wire.hpp"

#include <cmath>

#include "stepplan/error.hpp"

namespace stepplan::wire {
namespace {

using nlohmann::json;

const json& require(const json& body, const char* field) {
  if (!body.is_object()) throw ProtocolError("<body>", "body must be a JSON object");
  auto it = body.find(field);
  if (it == body.end()) throw ProtocolError(field, std::string("missing field \"") + field + "\"");
  return *it;
}

std::string get_string(const json& body, const char* field) {
  const auto& v = require(body, field);
  if (!v.is_string()) throw ProtocolError(field, std::string("field \"") + field + "\" must be a string");
  return v.get<std::string>();
}

double get_number(const json& body, const char* field) {
  const auto& v = require(body, field);
  if (!v.is_number()) throw ProtocolError(field, std::string("field \"") + field + "\" must be a number");
  return v.get<double>();
}

long long get_integer(const json& body, const char* field) {
  const auto& v = require(body, field);
  if (!v.is_number_integer()) throw ProtocolError(field, std::string("field \"") + field + "\" must be an integer");
  return v.get<long long>();
}

std::uint64_t get_seed(const json& body, const char* field) {
  const auto& v = require(body, field);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ProtocolError(field, std::string("field \"") + field + "\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<std::string> get_strings(const json& body, const char* field) {
  const auto& v = require(body, field);
  if (!v.is_array()) throw ProtocolError(field, std::string("field \"") + field + "\" must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ProtocolError(field, std::string("field \"") + field + "\" must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void put_instance(json& out, const PlanningInstance& instance) {
  out["task"] = to_string(instance.kind);
  out["goal"] = instance.goal.text;
  if (instance.condition) out["condition"] = instance.condition->text;
  if (instance.initial_plan) out["initial_plan"] = instance.initial_plan->texts();
}

PlanningInstance get_instance(const json& body) {
  PlanningInstance instance;
  try {
    instance.kind = task_kind_from_string(get_string(body, "task"));
  } catch (const ValidationError& e) {
    throw ProtocolError("task", e.what());
  }
  instance.goal.text = get_string(body, "goal");
  if (body.contains("condition") && !body["condition"].is_null())
    instance.condition = Condition{get_string(body, "condition"), std::nullopt};
  if (body.contains("initial_plan") && !body["initial_plan"].is_null()) {
    try {
      instance.initial_plan = Plan::from_texts(get_strings(body, "initial_plan"));
    } catch (const ValidationError& e) {
      throw ProtocolError("initial_plan", e.what());
    }
  }
  try {
    validate(instance);
  } catch (const ValidationError& e) {
    throw ProtocolError("task", e.what());
  }
  return instance;
}

}  // namespace

json encode_method(const DecodingMethod& method) {
  json out = {{"kind", to_string(method.kind)}, {"seed", method.seed}};
  if (method.beam_width) out["beam_width"] = *method.beam_width;
  if (method.top_p) out["top_p"] = *method.top_p;
  if (method.temperature) out["temperature"] = *method.temperature;
  return out;
}

DecodingMethod decode_method(const json& body) {
  DecodingMethod m;
  try {
    m.kind = method_kind_from_string(get_string(body, "kind"));
  } catch (const ValidationError& e) {
    throw ProtocolError("method.kind", e.what());
  }
  m.seed = body.contains("seed") ? get_seed(body, "seed") : 0;
  if (body.contains("beam_width")) m.beam_width = static_cast<int>(get_integer(body, "beam_width"));
  if (body.contains("top_p")) m.top_p = get_number(body, "top_p");
  if (body.contains("temperature")) m.temperature = get_number(body, "temperature");
  try {
    m.validate();
  } catch (const ValidationError& e) {
    throw ProtocolError("method", e.what());
  }
  return m;
}

json encode(const ProposeRequest& r) {
  json out;
  put_instance(out, r.instance);
  out["prefix_steps"] = r.prefix;
  out["n"] = r.n;
  out["method"] = encode_method(r.method);
  return out;
}

json encode(const LoglikRequest& r) {
  json out;
  put_instance(out, r.instance);
  out["steps"] = r.steps;
  return out;
}

json encode(const VerifyRequest& r) {
  return {{"goal", r.goal.text}, {"prefix_steps", r.prefix}, {"candidate_step", r.candidate}};
}

json encode(const CompleteRequest& r) {
  return {{"prompt", r.prompt},
          {"max_tokens", r.params.max_tokens},
          {"top_p", r.params.top_p},
          {"temperature", r.params.temperature},
          {"seed", r.params.seed}};
}

ProposeRequest decode_propose_request(const json& body) {
  ProposeRequest r;
  r.instance = get_instance(body);
  r.prefix = get_strings(body, "prefix_steps");
  const long long n = get_integer(body, "n");
  if (n < 1 || n > 1'000'000) throw ProtocolError("n", "field \"n\" must be a positive integer");
  r.n = static_cast<int>(n);
  r.method = decode_method(require(body, "method"));
  return r;
}

LoglikRequest decode_loglik_request(const json& body) {
  LoglikRequest r;
  r.instance = get_instance(body);
  r.steps = get_strings(body, "steps");
  return r;
}

VerifyRequest decode_verify_request(const json& body) {
  VerifyRequest r;
  r.goal.text = get_string(body, "goal");
  r.prefix = get_strings(body, "prefix_steps");
  r.candidate = get_string(body, "candidate_step");
  return r;
}

CompleteRequest decode_complete_request(const json& body) {
  CompleteRequest r;
  r.prompt = get_string(body, "prompt");
  const long long max_tokens = get_integer(body, "max_tokens");
  if (max_tokens < 1) throw ProtocolError("max_tokens", "field \"max_tokens\" must be positive");
  r.params.max_tokens = static_cast<int>(max_tokens);
  r.params.top_p = get_number(body, "top_p");
  if (!(r.params.top_p > 0.0 && r.params.top_p <= 1.0)) throw ProtocolError("top_p", "top_p must be in (0, 1]");
  r.params.temperature = get_number(body, "temperature");
  if (!(r.params.temperature > 0.0)) throw ProtocolError("temperature", "temperature must be > 0");
  r.params.seed = get_seed(body, "seed");
  return r;
}

json encode_candidates(const std::vector<StepCandidate>& candidates) {
  json arr = json::array();
  for (const auto& c : candidates)
    arr.push_back({{"text", c.text}, {"logprob_sum", c.logprob_sum}, {"token_count", c.token_count},
                   {"terminal", c.terminal}});
  return {{"candidates", std::move(arr)}};
}

json encode_likelihood(const Likelihood& l) {
  return {{"logprob_sum", l.logprob_sum}, {"token_count", l.token_count}};
}

json encode_validity(double validity) { return {{"validity", validity}}; }

json encode_completion(const std::string& text) { return {{"text", text}}; }

std::vector<StepCandidate> decode_candidates(const json& body, int n) {
  const auto& arr = require(body, "candidates");
  if (!arr.is_array()) throw ProtocolError("candidates", "field \"candidates\" must be an array");
  if (arr.size() > static_cast<std::size_t>(n))
    throw ProtocolError("candidates", "received " + std::to_string(arr.size()) + " candidates for n=" +
                                          std::to_string(n));
  std::vector<StepCandidate> out;
  for (const auto& c : arr) {
    StepCandidate s;
    s.text = get_string(c, "text");
    s.logprob_sum = get_number(c, "logprob_sum");
    if (!std::isfinite(s.logprob_sum) || s.logprob_sum > 0.0)
      throw ProtocolError("candidates.logprob_sum", "logprob_sum must be finite and <= 0");
    const long long tokens = get_integer(c, "token_count");
    if (tokens < 1) throw ProtocolError("candidates.token_count", "token_count must be >= 1");
    s.token_count = static_cast<int>(tokens);
    if (c.contains("terminal")) {
      if (!c["terminal"].is_boolean()) throw ProtocolError("candidates.terminal", "terminal must be a boolean");
      s.terminal = c["terminal"].get<bool>();
    }
    if (!s.terminal && trim(s.text).empty())
      throw ProtocolError("candidates.text", "non-terminal candidate has empty text");
    out.push_back(std::move(s));
  }
  return out;
}

Likelihood decode_likelihood(const json& body) {
  Likelihood l;
  l.logprob_sum = get_number(body, "logprob_sum");
  if (!std::isfinite(l.logprob_sum) || l.logprob_sum > 0.0)
    throw ProtocolError("logprob_sum", "logprob_sum must be finite and <= 0");
  const long long tokens = get_integer(body, "token_count");
  if (tokens < 0) throw ProtocolError("token_count", "token_count must be >= 0");
  l.token_count = static_cast<int>(tokens);
  return l;
}

double decode_validity(const json& body) {
  const double v = get_number(body, "validity");
  if (!(v >= 0.0 && v <= 1.0)) throw ProtocolError("validity", "validity " + std::to_string(v) + " outside [0, 1]");
  return v;
}

std::string decode_completion(const json& body) { return get_string(body, "text"); }

}  // namespace stepplan::wire
