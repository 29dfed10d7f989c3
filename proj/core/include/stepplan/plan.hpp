#pragma once

// Domain values for procedural planning: goals, steps, plans, conditions and
// the three task kinds, plus the canonical prompt template and the inverse
// "Step k: ..." parser.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stepplan {

struct Goal {
  std::string text;
  std::string id;

  friend bool operator==(const Goal&, const Goal&) = default;
};

struct Step {
  std::string text;
  int index = 1;  // 1-based

  friend bool operator==(const Step&, const Step&) = default;
};

struct Plan {
  std::vector<Step> steps;
  bool terminal = false;

  std::size_t size() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }
  std::vector<std::string> texts() const;

  /// Builds a plan from step texts, trimming each and assigning 1..T.
  static Plan from_texts(const std::vector<std::string>& texts, bool terminal = false);

  friend bool operator==(const Plan&, const Plan&) = default;
};

enum class ConditionCategory { location, equipment, safety, user_specification, other };

struct Condition {
  std::string text;
  std::optional<ConditionCategory> category;

  friend bool operator==(const Condition&, const Condition&) = default;
};

enum class TaskKind { planning, counterfactual_planning, counterfactual_revision };

struct PlanningInstance {
  TaskKind kind = TaskKind::planning;
  Goal goal;
  std::optional<Condition> condition;
  std::optional<Plan> initial_plan;
  /// Expected output (y for planning, y' for the counterfactual kinds), if known.
  std::optional<Plan> plan;
};

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view text);
std::string_view to_string(ConditionCategory category);
ConditionCategory condition_category_from_string(std::string_view text);

/// Trims ASCII whitespace from both ends.
std::string trim(std::string_view text);

/// Normalizes a step text: trims, rejects empty text and embedded newlines.
std::string normalize_step_text(std::string_view text);

/// Throws ValidationError naming the offending field when the optional fields
/// do not match what the task kind requires, or when any text is empty.
void validate(const PlanningInstance& instance);

/// Canonical prompt for the proposer. Deterministic and injective over
/// (instance, prefix); the trailing "Step t+1:" cue has no trailing space.
std::string render_template(const PlanningInstance& instance, const std::vector<Step>& prefix);
std::string render_template(const PlanningInstance& instance, const std::vector<std::string>& prefix);

/// "Step 1: a\nStep 2: b" for the given steps (no trailing newline).
std::string render_step_lines(const std::vector<std::string>& steps);

/// Parses "Step <k>: <content>" lines, sorted by k and reindexed to 1..T.
/// Non-matching lines are ignored; duplicate k values raise ParseError.
Plan parse_plan(std::string_view text);

// Line-delimited record format: {id, kind, goal, condition?, initial_plan?, plan?}.
nlohmann::json to_json(const PlanningInstance& instance);
PlanningInstance instance_from_json(const nlohmann::json& record);
nlohmann::json plan_to_json(const Plan& plan);
Plan plan_from_json(const nlohmann::json& value);

}  // namespace stepplan
