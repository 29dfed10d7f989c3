// Verifier-data generation and critic-score curation.

#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "stepplan/curation.hpp"
#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"
#include "stepplan/verifier_data.hpp"

namespace stepplan::cli {
namespace {

std::vector<GoldPlan> load_gold_plans(const std::string& path) {
  std::vector<GoldPlan> out;
  try {
    for (const auto& rec : read_jsonl(path)) {
      if (!rec.contains("goal") || !rec.contains("plan"))
        throw ValidationError("gold plan record needs \"goal\" and \"plan\": " + rec.dump());
      GoldPlan g;
      g.goal.text = rec["goal"].get<std::string>();
      g.goal.id = rec.value("id", std::to_string(out.size() + 1));
      g.plan = plan_from_json(rec["plan"]);
      g.plan.terminal = true;
      out.push_back(std::move(g));
    }
  } catch (const std::exception& e) {
    throw ConfigError("plans", e.what());
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

class GenNegatives final : public Command {
 public:
  explicit GenNegatives(CLI::App& parent)
      : Command(parent, "gen-negatives", "Build a verifier dataset of positive and perturbed negative pairs") {
    std::string all;
    for (auto k : kAllPerturbations) all += (all.empty() ? "" : ",") + std::string(to_string(k));
    kinds_ = all;
    settings_.add_path("plans", plans_, "line-delimited gold plans {id, goal, plan:[...]}", true);
    settings_.add("kinds", kinds_, "comma-separated perturbation kinds");
    settings_.add("per_kind", per_kind_, "negatives sampled per kind and plan");
    settings_.add("seed", seed_, "global seed");
  }

  int run() override {
    DatasetConfig cfg;
    cfg.per_kind = per_kind_;
    cfg.seed = seed_;
    cfg.kinds.clear();
    try {
      for (const auto& k : split_csv(kinds_)) cfg.kinds.push_back(perturbation_from_string(k));
    } catch (const std::exception& e) {
      throw ConfigError("kinds", e.what());
    }
    if (cfg.kinds.empty()) throw ConfigError("kinds", "--kinds must name at least one perturbation");
    if (per_kind_ < 0) throw ConfigError("per_kind", "--per_kind must be >= 0");

    const auto dataset = build_dataset(load_gold_plans(plans_), cfg);
    RunDir dir(settings_.out_dir(), "gen-negatives");
    std::vector<json> rows;
    rows.reserve(dataset.examples.size());
    for (const auto& ex : dataset.examples) rows.push_back(to_json(ex));
    write_jsonl(dir.file("dataset.jsonl"), rows);
    write_json(dir.file("dataset_manifest.json"), dataset.manifest.to_json());
    dir.write_manifest(settings_);

    std::cout << dir.path().string() << "\n"
              << dataset.manifest.positives << " positives, " << dataset.manifest.negatives << " negatives\n";
    return 0;
  }

 private:
  std::string plans_, kinds_;
  int per_kind_ = DatasetConfig{}.per_kind;
  std::uint64_t seed_ = 0;
};

class Curate final : public Command {
 public:
  explicit Curate(CLI::App& parent)
      : Command(parent, "curate", "Partition generated tuples by critic score thresholds") {
    settings_.add_path("records", records_, "line-delimited curation records", true);
    settings_.add("kind", kind_, "only curate records of this tuple kind (plan, condition, counterfactual)");
    settings_.add("tau_plan", policy_.plan, "threshold for plan tuples");
    settings_.add("tau_condition", policy_.condition, "threshold for condition tuples");
    settings_.add("tau_counterfactual", policy_.counterfactual, "threshold for counterfactual tuples");
  }

  int run() override {
    try {
      policy_.validate();
    } catch (const ValidationError& e) {
      throw ConfigError("tau", e.what());
    }
    std::optional<TupleKind> only;
    if (!kind_.empty()) {
      try {
        only = tuple_kind_from_string(kind_);
      } catch (const std::exception& e) {
        throw ConfigError("kind", e.what());
      }
    }

    std::vector<CurationRecord> records;
    try {
      for (const auto& j : read_jsonl(records_)) {
        auto r = record_from_json(j);
        if (!only || r.tuple_kind == *only) records.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      throw ConfigError("records", e.what());
    }

    const Partition part = curate(records, policy_);
    RunDir dir(settings_.out_dir(), "curate");
    auto dump = [&](const std::string& name, const std::vector<CurationRecord>& rs) {
      std::vector<json> rows;
      for (const auto& r : rs) rows.push_back(to_json(r));
      write_jsonl(dir.file(name), rows);
    };
    dump("accepted.jsonl", part.accepted);
    dump("rejected.jsonl", part.rejected);
    dump("pending.jsonl", part.pending);

    // A precision/recall sweep is only meaningful when every scored record
    // carries a gold label.
    std::vector<ScoredLabel> labelled;
    bool all_labelled = !records.empty();
    for (const auto& r : records) {
      if (!r.critic_score) continue;
      if (!r.gold_label) {
        all_labelled = false;
        break;
      }
      labelled.push_back({*r.critic_score, *r.gold_label});
    }
    if (all_labelled && !labelled.empty()) {
      auto taus = distinct_score_thresholds(labelled);
      write_text(dir.file("pr_curve.tsv"), pr_report(pr_curve(labelled, taus)));
    }

    json thresholds = json::object();
    for (auto k : {TupleKind::plan, TupleKind::condition, TupleKind::counterfactual})
      if (!only || k == *only) thresholds[std::string(to_string(k))] = policy_.threshold(k);
    json summary = {{"accepted", part.accepted.size()},
                    {"rejected", part.rejected.size()},
                    {"pending", part.pending.size()},
                    {"thresholds", thresholds}};
    write_json(dir.file("summary.json"), summary);
    dir.write_manifest(settings_, {{"summary", summary}});

    std::cout << dir.path().string() << "\n" << summary.dump() << "\n";
    return 0;
  }

 private:
  std::string records_, kind_;
  ThresholdPolicy policy_;
};

}  // namespace

std::unique_ptr<Command> make_gen_negatives(CLI::App& app) { return std::make_unique<GenNegatives>(app); }
std::unique_ptr<Command> make_curate(CLI::App& app) { return std::make_unique<Curate>(app); }

}  // namespace stepplan::cli
