#pragma once

// Teacher-side data generation: randomized plan-eliciting prompts, goal-pool
// bootstrapping and condition / counterfactual sampling over a completion
// backend.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stepplan/plan.hpp"
#include "stepplan/scorer.hpp"

namespace stepplan {

inline constexpr std::array<std::string_view, 2> kInstructionOpeners = {"For a given goal", "Given a goal"};
inline constexpr std::array<std::string_view, 4> kInstructionVerbs = {"write down", "break down into", "put down",
                                                                      "jot down"};
inline constexpr std::array<std::string_view, 7> kInstructionUnits = {
    "steps", "subgoals", "a list of steps", "several steps", "several subgoals", "some steps", "some small steps"};
inline constexpr std::array<std::string_view, 3> kInstructionPurposes = {"to achieve the goal", "for achieving the goal",
                                                                         "to attain the goal"};

inline constexpr std::size_t kInstructionVariants =
    kInstructionOpeners.size() * kInstructionVerbs.size() * kInstructionUnits.size() * kInstructionPurposes.size();

struct SlotChoice {
  std::size_t opener = 0, verb = 0, unit = 0, purpose = 0;
};

/// "{opener}, {verb} {unit} {purpose}.\n\n"
std::string instruction_prefix(const SlotChoice& choice);
SlotChoice random_slots(std::uint64_t seed);
std::string randomized_prefix(std::uint64_t seed);

struct Exemplar {
  std::string goal;
  std::vector<std::string> steps;
};

struct PromptRecipe {
  SlotChoice slots;
  std::vector<Exemplar> in_context;
  std::string target_goal;
};

/// Instruction prefix, exemplar blocks separated by blank lines, then
/// "Goal: <target>\nStep 1:".
std::string assemble_prompt(const PromptRecipe& recipe);

enum class GoalProvenance { seed, generated, exemplar };
std::string_view to_string(GoalProvenance p);
GoalProvenance goal_provenance_from_string(std::string_view text);

struct PoolGoal {
  std::string text;
  GoalProvenance provenance = GoalProvenance::seed;
  int round = 0;
};

/// Goals deduplicated on lower-cased, whitespace-collapsed text.
class GoalPool {
 public:
  static std::string key(std::string_view text);

  /// Returns false (and leaves the pool unchanged) for duplicates or blank text.
  bool add(std::string_view text, GoalProvenance provenance, int round);
  bool contains(std::string_view text) const { return keys_.count(key(text)) > 0; }

  const std::vector<PoolGoal>& goals() const noexcept { return goals_; }
  std::size_t size() const noexcept { return goals_.size(); }
  int rounds() const noexcept { return rounds_; }
  void set_rounds(int r) { rounds_ = r; }

  std::vector<nlohmann::json> to_records() const;
  static GoalPool from_records(const std::vector<nlohmann::json>& records);

 private:
  std::vector<PoolGoal> goals_;
  std::map<std::string, std::size_t> keys_;
  int rounds_ = 0;
};

struct BootstrapReport {
  int round = 0;
  std::size_t proposed = 0;
  std::size_t added = 0;
  std::string error;  // non-empty when the round was aborted
};

/// Each round prompts the completion backend with `batch` goals sampled from
/// the pool and merges the novel goals it returns (one per line).
GoalPool bootstrap_goals(GoalPool pool, const CompletionModel& completion, int rounds, int batch,
                         const SamplingParams& params, std::vector<BootstrapReport>* reports = nullptr);

/// Keyword-count heuristic over the condition families (location, equipment,
/// safety, user specification); `other` when nothing matches.
ConditionCategory categorize_condition(std::string_view text);

/// Replaces "{name}" placeholders; lines starting with '#' are dropped so
/// template files can carry headers. Unknown placeholders raise ValidationError.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);
std::string load_template(const std::filesystem::path& path);

/// Placeholders: {goal}, {plan}.
std::vector<Condition> sample_conditions(const Goal& goal, const Plan& plan, const CompletionModel& completion,
                                         std::string_view prompt_template, const SamplingParams& params,
                                         std::vector<std::string>* warnings = nullptr);

/// Placeholders: {goal}, {plan}, {condition}. Throws ParseError carrying the
/// raw completion when no "Step k:" lines come back.
Plan sample_counterfactual(const Goal& goal, const Plan& plan, const Condition& condition,
                           const CompletionModel& completion, std::string_view prompt_template,
                           const SamplingParams& params);

}  // namespace stepplan
