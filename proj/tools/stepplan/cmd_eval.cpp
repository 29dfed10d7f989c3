#include <iostream>
#include <map>

#include "commands.hpp"
#include "stepplan/embodied.hpp"
#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"

namespace stepplan::cli {
namespace {

class EvalEmbodied final : public Command {
 public:
  explicit EvalEmbodied(CLI::App& parent)
      : Command(parent, "eval-embodied", "Translate plans to admissible actions and score them in the mini environment") {
    settings_.add_path("plans", plans_, "line-delimited {id|goal_id, plan:[...]} (decode output works)", true);
    settings_.add_path("env", env_, "environment description (defaults to the shipped household)", false);
    settings_.add_path("golds", golds_, "gold action programs (defaults to the shipped set)", false);
    settings_.add_path("embeddings", embeddings_, "precomputed {text, vector} records; token bags if omitted", false);
    settings_.add("min_similarity", min_similarity_, "drop steps whose best match scores below this");
  }

  int run() override {
    auto fill_default = [&](std::string& slot, const char* rel) {
      if (!slot.empty()) return;
      slot = (default_data_dir() / rel).string();
      settings_.note_input(slot);
    };
    fill_default(env_, "env/household.json");
    fill_default(golds_, "env/gold_programs.jsonl");

    MiniEnv env;
    std::map<std::string, GoldProgram> gold_by_id;
    std::vector<EvalItem> items;
    std::unique_ptr<Embedder> embedder;
    try {
      env = MiniEnv::load(env_);
      for (auto& g : golds_from_jsonl(read_jsonl(golds_))) gold_by_id[g.goal_id] = std::move(g);
      for (const auto& rec : read_jsonl(plans_)) {
        const std::string id = rec.contains("goal_id") ? rec["goal_id"].get<std::string>() : rec.at("id").get<std::string>();
        items.push_back({id, plan_from_json(rec.at("plan"))});
      }
      if (embeddings_.empty())
        embedder = std::make_unique<TokenBagEmbedder>();
      else
        embedder = std::make_unique<PrecomputedEmbedder>(PrecomputedEmbedder::from_jsonl(read_jsonl(embeddings_)));
    } catch (const std::exception& e) {
      throw ConfigError("plans", e.what());
    }

    // Golds are matched to predictions by id, so the plans file may list a
    // subset of goals in any order.
    std::vector<GoldProgram> golds;
    for (const auto& it : items) {
      auto g = gold_by_id.find(it.goal_id);
      if (g == gold_by_id.end()) throw ConfigError("plans", "no gold program for goal id \"" + it.goal_id + "\"");
      golds.push_back(g->second);
    }

    const ActionVocab vocab = ActionVocab::ground(env);
    const EvalReport report = evaluate(items, env, vocab, golds, *embedder, EvalConfig{min_similarity_});

    RunDir dir(settings_.out_dir(), "eval-embodied");
    write_jsonl(dir.file("items.jsonl"), report.records());
    write_json(dir.file("summary.json"), report.summary());
    dir.write_manifest(settings_, {{"summary", report.summary()}});
    std::cout << dir.path().string() << "\n" << report.summary().dump() << "\n";
    return 0;
  }

 private:
  std::string plans_, env_, golds_, embeddings_;
  double min_similarity_ = 0.0;
};

}  // namespace

std::unique_ptr<Command> make_eval_embodied(CLI::App& app) { return std::make_unique<EvalEmbodied>(app); }

}  // namespace stepplan::cli
