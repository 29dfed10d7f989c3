#include <iostream>

#include "commands.hpp"
#include "stepplan/decoder.hpp"
#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"

namespace stepplan::cli {
namespace {

class Decode final : public Command {
 public:
  explicit Decode(CLI::App& parent) : Command(parent, "decode", "Step-wise beam search over planning instances") {
    const DecodeParams d = DecodeParams::defaults();
    alpha_ = d.alpha;
    beam_k_ = d.beam_k;
    candidates_n_ = d.candidates_n;
    max_steps_ = d.max_steps;
    epsilon_ = d.epsilon;
    seed_ = d.seed;
    method_mix_ = d.to_json()["method_mix"];

    settings_.add("scorer", scorer_, "mock:<fixture.json> or http://host:port");
    settings_.add_path("instances", instances_, "line-delimited planning instances", false);
    settings_.add("goal", goal_, "decode a single goal instead of --instances");
    settings_.add("alpha", alpha_, "weight of the likelihood term in the value function");
    settings_.add("beam_k", beam_k_, "beam width K", "--k");
    settings_.add("candidates_n", candidates_n_, "next-step candidates N per hypothesis", "--n");
    settings_.add_json("method_mix", method_mix_, "JSON list of {method, count, ...}; counts must sum to N");
    settings_.add("max_steps", max_steps_, "maximum plan length");
    settings_.add("epsilon", epsilon_, "lower clamp on verifier validity");
    settings_.add("seed", seed_, "global seed");
    settings_.add("accumulate_verifier", accumulate_, "score every step with the verifier, not just the last");
    settings_.add("parallelism", parallelism_, "worker tasks for the batch");
  }

  int run() override {
    if (scorer_.empty()) throw ConfigError("scorer", "--scorer is required");
    if (instances_.empty() == goal_.empty()) throw ConfigError("instances", "give exactly one of --instances, --goal");
    if (parallelism_ < 1) throw ConfigError("parallelism", "--parallelism must be >= 1");
    scorer_ = absolute_scorer_spec(scorer_);
    if (scorer_.rfind("mock:", 0) == 0) settings_.note_input(scorer_.substr(5));

    DecodeParams params;
    try {
      // When only N changed, the default mix is re-split (beam gets the
      // larger half) instead of failing the sum check.
      if (method_mix_ == DecodeParams::defaults().to_json()["method_mix"] && candidates_n_ != 10) {
        const int nucleus = candidates_n_ / 2, beam = candidates_n_ - nucleus;
        DecodeParams split;
        split.method_mix = {MethodAllocation{DecodingMethod::beam(beam), beam}};
        if (nucleus > 0) split.method_mix.push_back({DecodingMethod::nucleus(0.9, 1.0), nucleus});
        method_mix_ = split.to_json()["method_mix"];
      }
      json doc = {{"alpha", alpha_},         {"beam_k", beam_k_},   {"candidates_n", candidates_n_},
                  {"method_mix", method_mix_}, {"max_steps", max_steps_}, {"epsilon", epsilon_},
                  {"seed", seed_},           {"accumulate_verifier", accumulate_}};
      params = DecodeParams::from_json(doc);
      params.validate();
    } catch (const ValidationError& e) {
      throw ConfigError("decode", e.what());
    }

    std::vector<PlanningInstance> instances;
    try {
      if (!goal_.empty()) {
        instances.push_back(instance_from_json({{"id", "goal-1"}, {"goal", goal_}}));
      } else {
        for (const auto& rec : read_jsonl(instances_)) instances.push_back(instance_from_json(rec));
      }
    } catch (const std::exception& e) {
      throw ConfigError("instances", e.what());
    }

    const ScorerBundle bundle = open_scorer(scorer_);
    const auto results = decode_batch(instances, bundle, params, parallelism_);

    RunDir dir(settings_.out_dir(), "decode");
    std::vector<json> plans, traces;
    std::size_t failures = 0;
    std::map<std::string, std::size_t> stops;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& item = results[i];
      if (!item.result) {
        ++failures;
        json rec = to_json(instances[i]);
        rec["error"] = item.error;
        plans.push_back(rec);
        continue;
      }
      plans.push_back(result_record(instances[i], *item.result));
      ++stops[item.result->trace.stop_reason];
      for (auto& t : trace_records(item.result->trace, instances[i].goal.id)) traces.push_back(std::move(t));
    }
    write_jsonl(dir.file("plans.jsonl"), plans);
    write_jsonl(dir.file("traces.jsonl"), traces);
    json summary = {{"instances", instances.size()}, {"failed", failures}, {"stop_reasons", stops}};
    dir.write_manifest(settings_, {{"summary", summary}});

    std::cout << dir.path().string() << "\n";
    for (const auto& p : plans) {
      std::cout << p.value("id", "") << ": ";
      if (p.contains("error")) {
        std::cout << "ERROR " << p["error"].get<std::string>() << "\n";
        continue;
      }
      const auto& steps = p["plan"];
      for (std::size_t s = 0; s < steps.size(); ++s) std::cout << (s ? " | " : "") << steps[s].get<std::string>();
      std::cout << (p["complete"].get<bool>() ? "" : " [incomplete]") << "\n";
    }
    return failures == 0 ? 0 : 1;
  }

 private:
  std::string scorer_, instances_, goal_;
  double alpha_ = 0.75, epsilon_ = 1e-6;
  int beam_k_ = 5, candidates_n_ = 10, max_steps_ = 20, parallelism_ = 1;
  std::uint64_t seed_ = 0;
  bool accumulate_ = false;
  json method_mix_;
};

}  // namespace

std::unique_ptr<Command> make_decode(CLI::App& app) { return std::make_unique<Decode>(app); }

}  // namespace stepplan::cli
