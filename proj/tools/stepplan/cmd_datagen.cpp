#include <iostream>

#include "commands.hpp"
#include "stepplan/datagen.hpp"
#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"
#include "stepplan/rng.hpp"

namespace stepplan::cli {
namespace {

struct PlanRecord {
  std::string id;
  Goal goal;
  Plan plan;
  std::optional<Condition> condition;
};

std::vector<PlanRecord> load_plan_records(const std::string& path, const std::string& field) {
  std::vector<PlanRecord> out;
  try {
    for (const auto& rec : read_jsonl(path)) {
      PlanRecord r;
      r.id = rec.value("id", rec.value("source_plan_id", std::to_string(out.size() + 1)));
      r.goal = Goal{rec.at("goal").get<std::string>(), r.id};
      r.plan = plan_from_json(rec.at("plan"));
      if (rec.contains("condition")) r.condition = Condition{rec["condition"].get<std::string>(), std::nullopt};
      out.push_back(std::move(r));
    }
  } catch (const std::exception& e) {
    throw ConfigError(field, path + ": " + e.what());
  }
  return out;
}

class Datagen final : public Command {
 public:
  explicit Datagen(CLI::App& parent)
      : Command(parent, "datagen", "Generate goals, conditions, counterfactual plans or randomized prompts") {
    settings_.add("task", task_, "goals | conditions | counterfactuals | prompts");
    settings_.add("scorer", scorer_, "completion model: mock:<fixture.json> or http://host:port");
    settings_.add_path("goals", goals_, "seed goal pool (line-delimited {text, provenance, round})", false);
    settings_.add_path("plans", plans_, "gold plans for conditions; prompt exemplars (defaults to the shipped set)", false);
    settings_.add_path("conditions", conditions_, "records {goal, plan, condition} for counterfactuals", false);
    settings_.add_path("template", template_, "prompt template (defaults to the shipped one for the task)", false);
    settings_.add("rounds", rounds_, "bootstrap rounds for --task goals");
    settings_.add("batch", batch_, "in-context goals per bootstrap round");
    settings_.add("count", count_, "prompts to assemble for --task prompts");
    settings_.add("top_p", sampling_.top_p, "nucleus mass for completion calls");
    settings_.add("temperature", sampling_.temperature, "sampling temperature for completion calls");
    settings_.add("max_tokens", sampling_.max_tokens, "token budget per completion call");
    settings_.add("seed", seed_, "global seed");
  }

  int run() override {
    sampling_.seed = seed_;
    if (task_ == "prompts") return prompts();
    if (task_ != "goals" && task_ != "conditions" && task_ != "counterfactuals")
      throw ConfigError("task", "unknown --task \"" + task_ + "\"");
    if (scorer_.empty()) throw ConfigError("scorer", "--scorer is required for --task " + task_);
    scorer_ = absolute_scorer_spec(scorer_);
    if (scorer_.rfind("mock:", 0) == 0) settings_.note_input(scorer_.substr(5));
    const ScorerBundle bundle = open_scorer(scorer_);
    if (!bundle.completion) throw ConfigError("scorer", "scorer has no completion model");
    if (task_ == "goals") return goals(*bundle.completion);
    return task_ == "conditions" ? conditions(*bundle.completion) : counterfactuals(*bundle.completion);
  }

 private:
  std::string template_text(const std::string& name) {
    if (template_.empty()) {
      template_ = (default_data_dir() / "templates" / (name + ".txt")).string();
      settings_.note_input(template_);
    }
    try {
      return load_template(template_);
    } catch (const std::exception& e) {
      throw ConfigError("template", e.what());
    }
  }

  int goals(const CompletionModel& completion) {
    if (goals_.empty()) throw ConfigError("goals", "--goals is required for --task goals");
    GoalPool pool;
    try {
      pool = GoalPool::from_records(read_jsonl(goals_));
    } catch (const std::exception& e) {
      throw ConfigError("goals", e.what());
    }
    std::vector<BootstrapReport> reports;
    const GoalPool grown = bootstrap_goals(pool, completion, rounds_, batch_, sampling_, &reports);
    RunDir dir(settings_.out_dir(), "datagen");
    write_jsonl(dir.file("goals.jsonl"), grown.to_records());
    json rounds = json::array();
    bool aborted = false;
    for (const auto& r : reports) {
      rounds.push_back({{"round", r.round}, {"proposed", r.proposed}, {"added", r.added}, {"error", r.error}});
      aborted = aborted || !r.error.empty();
    }
    dir.write_manifest(settings_, {{"summary", {{"pool", grown.size()}, {"rounds", rounds}}}});
    std::cout << dir.path().string() << "\n" << pool.size() << " -> " << grown.size() << " goals\n";
    return aborted ? 1 : 0;
  }

  int conditions(const CompletionModel& completion) {
    if (plans_.empty()) throw ConfigError("plans", "--plans is required for --task conditions");
    const auto tmpl = template_text("condition");
    const auto plans = load_plan_records(plans_, "plans");
    std::vector<json> rows;
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      SamplingParams call = sampling_;
      call.seed = mix_seed(seed_, i);
      for (const auto& c : sample_conditions(plans[i].goal, plans[i].plan, completion, tmpl, call, &warnings))
        rows.push_back({{"source_plan_id", plans[i].id},
                        {"goal", plans[i].goal.text},
                        {"plan", plans[i].plan.texts()},
                        {"condition", c.text},
                        {"category", c.category ? std::string(to_string(*c.category)) : "other"}});
    }
    RunDir dir(settings_.out_dir(), "datagen");
    write_jsonl(dir.file("conditions.jsonl"), rows);
    dir.write_manifest(settings_, {{"summary", {{"conditions", rows.size()}, {"warnings", warnings}}}});
    std::cout << dir.path().string() << "\n" << rows.size() << " conditions\n";
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    return 0;
  }

  int counterfactuals(const CompletionModel& completion) {
    if (conditions_.empty()) throw ConfigError("conditions", "--conditions is required for --task counterfactuals");
    const auto tmpl = template_text("counterfactual");
    const auto recs = load_plan_records(conditions_, "conditions");
    std::vector<json> rows;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (!recs[i].condition) throw ConfigError("conditions", "record " + recs[i].id + " has no condition");
      SamplingParams call = sampling_;
      call.seed = mix_seed(seed_, i);
      const Plan revised = sample_counterfactual(recs[i].goal, recs[i].plan, *recs[i].condition, completion, tmpl, call);
      rows.push_back({{"source_plan_id", recs[i].id},
                      {"goal", recs[i].goal.text},
                      {"plan", recs[i].plan.texts()},
                      {"condition", recs[i].condition->text},
                      {"revised_plan", revised.texts()}});
    }
    RunDir dir(settings_.out_dir(), "datagen");
    write_jsonl(dir.file("counterfactuals.jsonl"), rows);
    dir.write_manifest(settings_, {{"summary", {{"counterfactuals", rows.size()}}}});
    std::cout << dir.path().string() << "\n" << rows.size() << " counterfactual plans\n";
    return 0;
  }

  // Assembles generation prompts: a randomized instruction prefix, up to two
  // gold plans as exemplars and one target goal from the pool.
  int prompts() {
    if (count_ < 1) throw ConfigError("count", "--count must be >= 1");
    if (goals_.empty()) throw ConfigError("goals", "--goals is required for --task prompts");
    std::vector<std::string> targets;
    std::vector<Exemplar> exemplars;
    try {
      const GoalPool pool = GoalPool::from_records(read_jsonl(goals_));
      for (const auto& g : pool.goals()) targets.push_back(g.text);
    } catch (const std::exception& e) {
      throw ConfigError("goals", e.what());
    }
    if (targets.empty()) throw ConfigError("goals", "goal pool is empty");
    if (plans_.empty()) {
      plans_ = (default_data_dir() / "gold_plans.jsonl").string();
      settings_.note_input(plans_);
    }
    for (const auto& p : load_plan_records(plans_, "plans")) exemplars.push_back({p.goal.text, p.plan.texts()});
    if (exemplars.empty()) throw ConfigError("plans", "--plans holds no exemplar plans");

    std::vector<json> rows;
    for (int i = 0; i < count_; ++i) {
      const auto k = static_cast<std::uint64_t>(i);
      PromptRecipe recipe;
      recipe.slots = random_slots(mix_seed(seed_, k));
      recipe.target_goal = targets[k % targets.size()];
      for (std::size_t e = 0; e < exemplars.size() && recipe.in_context.size() < 2; ++e)
        if (exemplars[e].goal != recipe.target_goal) recipe.in_context.push_back(exemplars[e]);
      rows.push_back({{"index", i},
                      {"target_goal", recipe.target_goal},
                      {"prefix", instruction_prefix(recipe.slots)},
                      {"prompt", assemble_prompt(recipe)}});
    }
    RunDir dir(settings_.out_dir(), "datagen");
    write_jsonl(dir.file("prompts.jsonl"), rows);
    dir.write_manifest(settings_, {{"summary", {{"prompts", rows.size()}}}});
    std::cout << dir.path().string() << "\n" << rows.size() << " prompts\n";
    return 0;
  }

  std::string task_ = "goals", scorer_, goals_, plans_, conditions_, template_;
  int rounds_ = 1, batch_ = 4, count_ = 10;
  SamplingParams sampling_;
  std::uint64_t seed_ = 0;
};

}  // namespace

std::unique_ptr<Command> make_datagen(CLI::App& app) { return std::make_unique<Datagen>(app); }

}  // namespace stepplan::cli
