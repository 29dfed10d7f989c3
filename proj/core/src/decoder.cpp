#include "stepplan/decoder.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <set>
#include <thread>

#include "stepplan/error.hpp"
#include "stepplan/rng.hpp"

namespace stepplan {
namespace {

using nlohmann::json;

// Lower-cased, whitespace-collapsed, trailing punctuation dropped.
std::string canonical(std::string_view text) {
  std::string out;
  bool space = false;
  for (unsigned char c : trim(text)) {
    if (std::isspace(c)) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(c));
  }
  while (!out.empty() && std::ispunct(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

std::string dedup_key(const Hypothesis& h) {
  std::string key = h.complete ? "1" : "0";
  for (const auto& s : h.steps) {
    key += '\x1f';
    key += s;
  }
  return key;
}

struct Counters {
  std::uint64_t proposer = 0;
  std::uint64_t likelihood = 0;
  std::uint64_t verifier = 0;
};

ExpandResult expand_impl(const std::vector<Hypothesis>& beam, const PlanningInstance& instance,
                         const ScorerBundle& bundle, const DecodeParams& params, Counters& counters) {
  ExpandResult out;
  std::set<std::string> seen;
  const std::string goal_key = canonical(instance.goal.text);
  const bool use_verifier = params.alpha < 1.0;

  for (const auto& parent : beam) {
    if (parent.complete) throw std::logic_error("completed hypotheses are never expanded");

    std::vector<StepCandidate> candidates;
    for (std::size_t m = 0; m < params.method_mix.size(); ++m) {
      const auto& alloc = params.method_mix[m];
      DecodingMethod method = alloc.method;
      method.seed = mix_seed(params.seed, m);
      std::vector<StepCandidate> got;
      try {
        got = bundle.proposer->propose(instance, parent.steps, alloc.count, method);
        ++counters.proposer;
      } catch (const std::exception& e) {
        throw DecodeError(std::string("proposer failed: ") + e.what(), parent.steps, {});
      }
      if (got.size() > static_cast<std::size_t>(alloc.count))
        throw DecodeError("proposer returned more candidates than requested", parent.steps, {});
      candidates.insert(candidates.end(), got.begin(), got.end());
    }

    int ordinal = 0;
    for (const auto& cand : candidates) {
      Hypothesis child;
      child.lineage = parent.lineage;
      child.lineage.push_back(ordinal);

      if (cand.terminal) {
        if (parent.steps.empty()) {
          out.events.push_back({"prune", parent.lineage, cand.text, "end-of-plan before any step"});
          continue;
        }
        child.steps = parent.steps;
        child.verifier_log_scores = parent.verifier_log_scores;
        child.loglik_sum = parent.loglik_sum + cand.logprob_sum;
        child.token_count = parent.token_count + cand.token_count;
        child.complete = true;
      } else {
        std::string text;
        try {
          text = normalize_step_text(cand.text);
        } catch (const ValidationError& e) {
          out.events.push_back({"prune", parent.lineage, cand.text, e.what()});
          continue;
        }
        if (static_cast<int>(parent.steps.size()) >= params.max_steps) {
          out.events.push_back({"prune", parent.lineage, text, "max_steps reached"});
          continue;
        }
        child.steps = parent.steps;
        child.steps.push_back(text);
        child.complete = canonical(text) == goal_key;
      }

      if (!seen.insert(dedup_key(child)).second) {
        out.events.push_back({"dedup", parent.lineage, cand.text, "duplicate extension"});
        continue;
      }
      ++ordinal;

      if (!cand.terminal) {
        try {
          const Likelihood lik = bundle.likelihood->loglik(instance, child.steps);
          ++counters.likelihood;
          if (lik.token_count < 1 || !std::isfinite(lik.logprob_sum))
            throw ScorerError("likelihood returned an invalid score");
          child.loglik_sum = lik.logprob_sum;
          child.token_count = lik.token_count;

          double log_validity = 0.0;
          if (use_verifier) {
            const double validity = bundle.verifier->verify(instance.goal, parent.steps, child.steps.back());
            ++counters.verifier;
            if (!(validity >= 0.0 && validity <= 1.0))
              throw ScorerError("verifier returned " + std::to_string(validity) + " outside [0, 1]");
            log_validity = verifier_log_score(validity, params.epsilon);
          }
          child.verifier_log_scores = parent.verifier_log_scores;
          child.verifier_log_scores.push_back(log_validity);
        } catch (const std::exception& e) {
          throw DecodeError(std::string("scoring failed: ") + e.what(), child.steps, {});
        }
      }
      child.value = value(child, params.alpha, params.accumulate_verifier);
      out.pool.push_back(std::move(child));
    }
  }
  return out;
}

std::vector<std::vector<int>> lineages(const std::vector<Hypothesis>& hyps) {
  std::vector<std::vector<int>> out;
  out.reserve(hyps.size());
  for (const auto& h : hyps) out.push_back(h.lineage);
  return out;
}

json method_to_json(const MethodAllocation& a) {
  json out = {{"kind", to_string(a.method.kind)}, {"count", a.count}};
  if (a.method.beam_width) out["beam_width"] = *a.method.beam_width;
  if (a.method.top_p) out["top_p"] = *a.method.top_p;
  if (a.method.temperature) out["temperature"] = *a.method.temperature;
  return out;
}

MethodAllocation method_from_json(const json& j) {
  static const std::set<std::string> known = {"kind", "count", "beam_width", "top_p", "temperature"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ValidationError("method_mix: unknown field \"" + it.key() + "\"");
  MethodAllocation a;
  a.method.kind = method_kind_from_string(j.at("kind").get<std::string>());
  a.count = j.at("count").get<int>();
  if (j.contains("beam_width")) a.method.beam_width = j["beam_width"].get<int>();
  if (j.contains("top_p")) a.method.top_p = j["top_p"].get<double>();
  if (j.contains("temperature")) a.method.temperature = j["temperature"].get<double>();
  if (a.method.kind == MethodKind::beam && !a.method.beam_width) a.method.beam_width = a.count;
  if (a.method.kind == MethodKind::nucleus && !a.method.temperature) a.method.temperature = 1.0;
  return a;
}

}  // namespace

DecodeParams DecodeParams::defaults() {
  DecodeParams p;
  p.method_mix = {MethodAllocation{DecodingMethod::beam(5), 5},
                  MethodAllocation{DecodingMethod::nucleus(0.9, 1.0), 5}};
  return p;
}

std::vector<MethodAllocation> DecodeParams::single_method(const DecodingMethod& method, int n) {
  return {MethodAllocation{method, n}};
}

void DecodeParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must be in [0, 1]");
  if (beam_k < 1) throw ValidationError("beam_k must be >= 1");
  if (candidates_n < 1) throw ValidationError("candidates_n must be >= 1");
  if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 0.01)) throw ValidationError("epsilon must be in (0, 0.01]");
  if (method_mix.empty()) throw ValidationError("method_mix must not be empty");
  int total = 0;
  for (const auto& a : method_mix) {
    if (a.count < 1) throw ValidationError("method_mix counts must be >= 1");
    a.method.validate();
    total += a.count;
  }
  if (total != candidates_n)
    throw ValidationError("method_mix counts sum to " + std::to_string(total) + ", expected candidates_n=" +
                          std::to_string(candidates_n));
}

json DecodeParams::to_json() const {
  json mix = json::array();
  for (const auto& a : method_mix) mix.push_back(method_to_json(a));
  return {{"alpha", alpha},         {"beam_k", beam_k},       {"candidates_n", candidates_n},
          {"method_mix", mix},      {"max_steps", max_steps}, {"epsilon", epsilon},
          {"seed", seed},           {"accumulate_verifier", accumulate_verifier}};
}

DecodeParams DecodeParams::from_json(const json& doc) {
  static const std::set<std::string> known = {"alpha",     "beam_k",  "candidates_n", "method_mix",
                                              "max_steps", "epsilon", "seed",         "accumulate_verifier"};
  if (!doc.is_object()) throw ValidationError("decode config must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) throw ValidationError("decode config: unknown field \"" + it.key() + "\"");

  DecodeParams p = defaults();
  try {
    if (doc.contains("alpha")) p.alpha = doc["alpha"].get<double>();
    if (doc.contains("beam_k")) p.beam_k = doc["beam_k"].get<int>();
    if (doc.contains("candidates_n")) p.candidates_n = doc["candidates_n"].get<int>();
    if (doc.contains("max_steps")) p.max_steps = doc["max_steps"].get<int>();
    if (doc.contains("epsilon")) p.epsilon = doc["epsilon"].get<double>();
    if (doc.contains("seed")) p.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("accumulate_verifier")) p.accumulate_verifier = doc["accumulate_verifier"].get<bool>();
    if (doc.contains("method_mix")) {
      p.method_mix.clear();
      for (const auto& m : doc["method_mix"]) p.method_mix.push_back(method_from_json(m));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("decode config: ") + e.what());
  }
  return p;
}

double verifier_log_score(double validity, double epsilon) {
  return std::log(std::clamp(validity, epsilon, 1.0));
}

double value(const Hypothesis& hyp, double alpha, bool accumulate_verifier) {
  if (hyp.token_count < 1 || hyp.verifier_log_scores.empty())
    throw std::invalid_argument("value() needs a hypothesis with at least one step");
  const double normalized = hyp.loglik_sum / hyp.token_count;
  double verifier = hyp.verifier_log_scores.back();
  if (accumulate_verifier) {
    verifier = 0.0;
    for (double s : hyp.verifier_log_scores) verifier += s;
  }
  // Skip the verifier term entirely at alpha = 1 so it cannot leak a -0.0 or
  // an unclamped value.
  if (alpha >= 1.0) return normalized;
  return alpha * normalized + (1.0 - alpha) * verifier;
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.value != b.value) return a.value > b.value;
  if (a.lineage.size() != b.lineage.size()) return a.lineage.size() < b.lineage.size();
  return a.lineage < b.lineage;
}

ExpandResult expand(const std::vector<Hypothesis>& beam, const PlanningInstance& instance,
                    const ScorerBundle& bundle, const DecodeParams& params) {
  Counters counters;
  return expand_impl(beam, instance, bundle, params, counters);
}

Selection select_top_k(std::vector<Hypothesis> pool, int k) {
  Selection out;
  std::sort(pool.begin(), pool.end(), ranks_before);
  if (k >= 0 && pool.size() > static_cast<std::size_t>(k)) pool.resize(static_cast<std::size_t>(k));
  for (const auto& h : pool) (h.complete ? out.finished : out.beam).push_back(h);
  out.ranked = std::move(pool);
  return out;
}

std::vector<std::vector<int>> replay_selection(const TraceIteration& iteration, int k) {
  return lineages(select_top_k(iteration.pool, k).ranked);
}

DecodeResult decode(const PlanningInstance& instance, const ScorerBundle& bundle, const DecodeParams& params) {
  validate(instance);
  params.validate();
  if (!bundle.proposer || !bundle.likelihood || (params.alpha < 1.0 && !bundle.verifier))
    throw ValidationError("scorer bundle is missing a required interface");

  DecodeResult result;
  auto& trace = result.trace;
  Counters counters;

  std::vector<Hypothesis> beam{Hypothesis{}};
  std::vector<Hypothesis> finished;
  std::optional<Hypothesis> best_incomplete;
  trace.stop_reason = "max_steps";

  for (int iter = 1; iter <= params.max_steps + 1; ++iter) {
    TraceIteration rec;
    rec.iteration = iter;
    rec.beam = lineages(beam);

    ExpandResult expanded;
    try {
      expanded = expand_impl(beam, instance, bundle, params, counters);
    } catch (const DecodeError& e) {
      trace.stop_reason = "error";
      trace.proposer_calls = counters.proposer;
      trace.likelihood_calls = counters.likelihood;
      trace.verifier_calls = counters.verifier;
      throw DecodeError(e.what(), e.hypothesis(), trace);
    }
    rec.pool = std::move(expanded.pool);
    rec.events = std::move(expanded.events);

    Selection sel = select_top_k(rec.pool, params.beam_k);
    rec.selected = lineages(sel.ranked);
    rec.finished = lineages(sel.finished);
    finished.insert(finished.end(), sel.finished.begin(), sel.finished.end());
    beam = std::move(sel.beam);
    if (!beam.empty()) best_incomplete = beam.front();
    trace.iterations.push_back(std::move(rec));

    if (finished.size() >= static_cast<std::size_t>(params.beam_k)) {
      trace.stop_reason = "finished";
      break;
    }
    if (beam.empty()) {
      trace.stop_reason = "exhausted";
      break;
    }
  }

  trace.proposer_calls = counters.proposer;
  trace.likelihood_calls = counters.likelihood;
  trace.verifier_calls = counters.verifier;

  std::sort(finished.begin(), finished.end(), ranks_before);
  result.finished = finished;
  if (!finished.empty()) {
    result.best = finished.front();
    result.plan = Plan::from_texts(result.best.steps, true);
  } else if (best_incomplete) {
    result.best = *best_incomplete;
    result.plan = Plan::from_texts(result.best.steps, false);
  }
  return result;
}

std::vector<BatchItem> decode_batch(const std::vector<PlanningInstance>& instances, const ScorerBundle& bundle,
                                    const DecodeParams& params, int parallelism) {
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  std::vector<BatchItem> out(instances.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < instances.size(); i = next.fetch_add(1)) {
      try {
        out[i].result = decode(instances[i], bundle, params);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };

  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(parallelism), instances.size());
  if (threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  return out;
}

json to_json(const Hypothesis& h) {
  return {{"lineage", h.lineage},       {"steps", h.steps},
          {"loglik_sum", h.loglik_sum}, {"token_count", h.token_count},
          {"verifier_log_scores", h.verifier_log_scores}, {"value", h.value},
          {"complete", h.complete}};
}

json to_json(const TraceIteration& it) {
  json pool = json::array();
  for (const auto& h : it.pool) pool.push_back(to_json(h));
  json events = json::array();
  for (const auto& e : it.events)
    events.push_back({{"kind", e.kind}, {"parent", e.parent_lineage}, {"text", e.text}, {"reason", e.reason}});
  return {{"iteration", it.iteration}, {"beam", it.beam},         {"pool", pool},
          {"selected", it.selected},   {"finished", it.finished}, {"events", events}};
}

std::vector<json> trace_records(const DecodeTrace& trace, const std::string& instance_id) {
  std::vector<json> out;
  for (const auto& it : trace.iterations) {
    json rec = to_json(it);
    rec["id"] = instance_id;
    out.push_back(std::move(rec));
  }
  out.push_back({{"id", instance_id},
                 {"summary", true},
                 {"stop_reason", trace.stop_reason},
                 {"iterations", trace.iterations.size()},
                 {"proposer_calls", trace.proposer_calls},
                 {"likelihood_calls", trace.likelihood_calls},
                 {"verifier_calls", trace.verifier_calls}});
  return out;
}

json result_record(const PlanningInstance& instance, const DecodeResult& result) {
  json out = to_json(instance);
  out["plan"] = result.plan.texts();
  out["complete"] = result.plan.terminal;
  out["value"] = result.best.value;
  out["loglik_sum"] = result.best.loglik_sum;
  out["token_count"] = result.best.token_count;
  return out;
}

}  // namespace stepplan
