#include "stepplan/plan.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "stepplan/error.hpp"

namespace stepplan {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

void require_text(std::string_view text, std::string_view field) {
  if (trim(text).empty()) throw ValidationError(std::string(field) + " must be non-empty");
}

void append_steps(std::string& out, const std::vector<std::string>& steps) {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    out += "Step ";
    out += std::to_string(i + 1);
    out += ": ";
    out += steps[i];
    out += '\n';
  }
}

}  // namespace

std::string trim(std::string_view text) {
  auto begin = text.begin();
  auto end = text.end();
  while (begin != end && is_space(*begin)) ++begin;
  while (end != begin && is_space(*(end - 1))) --end;
  return std::string(begin, end);
}

std::string normalize_step_text(std::string_view text) {
  std::string out = trim(text);
  if (out.empty()) throw ValidationError("step text must be non-empty");
  if (out.find('\n') != std::string::npos || out.find('\r') != std::string::npos)
    throw ValidationError("step text must not contain newlines: \"" + out + "\"");
  return out;
}

std::vector<std::string> Plan::texts() const {
  std::vector<std::string> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.text);
  return out;
}

Plan Plan::from_texts(const std::vector<std::string>& texts, bool terminal) {
  Plan plan;
  plan.terminal = terminal;
  plan.steps.reserve(texts.size());
  for (const auto& t : texts)
    plan.steps.push_back(Step{normalize_step_text(t), static_cast<int>(plan.steps.size()) + 1});
  return plan;
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::planning: return "planning";
    case TaskKind::counterfactual_planning: return "counterfactual-planning";
    case TaskKind::counterfactual_revision: return "counterfactual-revision";
  }
  return "planning";
}

TaskKind task_kind_from_string(std::string_view text) {
  if (text == "planning" || text == "pl") return TaskKind::planning;
  if (text == "counterfactual-planning" || text == "cp") return TaskKind::counterfactual_planning;
  if (text == "counterfactual-revision" || text == "cpr") return TaskKind::counterfactual_revision;
  throw ValidationError("unknown task kind \"" + std::string(text) + "\"");
}

std::string_view to_string(ConditionCategory category) {
  switch (category) {
    case ConditionCategory::location: return "location";
    case ConditionCategory::equipment: return "equipment";
    case ConditionCategory::safety: return "safety";
    case ConditionCategory::user_specification: return "user-specification";
    case ConditionCategory::other: return "other";
  }
  return "other";
}

ConditionCategory condition_category_from_string(std::string_view text) {
  if (text == "location") return ConditionCategory::location;
  if (text == "equipment") return ConditionCategory::equipment;
  if (text == "safety") return ConditionCategory::safety;
  if (text == "user-specification") return ConditionCategory::user_specification;
  if (text == "other") return ConditionCategory::other;
  throw ValidationError("unknown condition category \"" + std::string(text) + "\"");
}

void validate(const PlanningInstance& instance) {
  require_text(instance.goal.text, "goal");
  const bool needs_condition = instance.kind != TaskKind::planning;
  const bool needs_initial = instance.kind == TaskKind::counterfactual_revision;
  const std::string kind(to_string(instance.kind));

  if (needs_condition && !instance.condition)
    throw ValidationError("condition is required for task kind " + kind);
  if (!needs_condition && instance.condition)
    throw ValidationError("condition is not allowed for task kind " + kind);
  if (needs_initial && !instance.initial_plan)
    throw ValidationError("initial_plan is required for task kind " + kind);
  if (!needs_initial && instance.initial_plan)
    throw ValidationError("initial_plan is not allowed for task kind " + kind);

  if (instance.condition) require_text(instance.condition->text, "condition");
  if (instance.initial_plan) {
    if (instance.initial_plan->empty()) throw ValidationError("initial_plan must have at least one step");
    for (const auto& s : instance.initial_plan->steps) normalize_step_text(s.text);
  }
}

std::string render_template(const PlanningInstance& instance, const std::vector<std::string>& prefix) {
  validate(instance);
  std::string out = "Goal: " + trim(instance.goal.text) + "\n";
  if (instance.condition) out += "Condition: " + trim(instance.condition->text) + "\n";
  if (instance.initial_plan) {
    out += "Initial plan:\n";
    append_steps(out, instance.initial_plan->texts());
    out += "Revised plan:\n";
  }
  std::vector<std::string> normalized;
  normalized.reserve(prefix.size());
  for (const auto& p : prefix) normalized.push_back(normalize_step_text(p));
  append_steps(out, normalized);
  out += "Step " + std::to_string(prefix.size() + 1) + ":";
  return out;
}

std::string render_template(const PlanningInstance& instance, const std::vector<Step>& prefix) {
  std::vector<std::string> texts;
  texts.reserve(prefix.size());
  for (const auto& s : prefix) texts.push_back(s.text);
  return render_template(instance, texts);
}

std::string render_step_lines(const std::vector<std::string>& steps) {
  std::string out;
  append_steps(out, steps);
  if (!out.empty()) out.pop_back();
  return out;
}

Plan parse_plan(std::string_view text) {
  std::map<long, std::string> by_number;
  std::vector<long> duplicates;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;

    if (line.rfind("Step", 0) != 0) continue;
    std::size_t i = 4;
    while (i < line.size() && is_space(line[i])) ++i;
    if (i == 4 && i < line.size()) continue;  // "Steps..." is not a step line
    long number = 0;
    auto [end, ec] = std::from_chars(line.data() + i, line.data() + line.size(), number);
    if (ec != std::errc{} || number < 1) continue;
    i = static_cast<std::size_t>(end - line.data());
    while (i < line.size() && is_space(line[i])) ++i;
    if (i >= line.size() || line[i] != ':') continue;
    std::string content = trim(std::string_view(line).substr(i + 1));
    if (content.empty()) continue;

    if (!by_number.emplace(number, std::move(content)).second) duplicates.push_back(number);
  }

  if (!duplicates.empty()) {
    std::sort(duplicates.begin(), duplicates.end());
    duplicates.erase(std::unique(duplicates.begin(), duplicates.end()), duplicates.end());
    std::string msg = "duplicate step numbers:";
    for (long d : duplicates) msg += " " + std::to_string(d);
    throw ParseError(msg);
  }

  Plan plan;
  for (auto& [number, content] : by_number)
    plan.steps.push_back(Step{std::move(content), static_cast<int>(plan.steps.size()) + 1});
  return plan;
}

nlohmann::json plan_to_json(const Plan& plan) { return plan.texts(); }

Plan plan_from_json(const nlohmann::json& value) {
  if (!value.is_array()) throw ValidationError("plan must be an array of step strings");
  std::vector<std::string> texts;
  for (const auto& v : value) {
    if (!v.is_string()) throw ValidationError("plan steps must be strings");
    texts.push_back(v.get<std::string>());
  }
  return Plan::from_texts(texts);
}

nlohmann::json to_json(const PlanningInstance& instance) {
  nlohmann::json out;
  out["id"] = instance.goal.id;
  out["kind"] = to_string(instance.kind);
  out["goal"] = instance.goal.text;
  if (instance.condition) out["condition"] = instance.condition->text;
  if (instance.initial_plan) out["initial_plan"] = plan_to_json(*instance.initial_plan);
  if (instance.plan) out["plan"] = plan_to_json(*instance.plan);
  return out;
}

PlanningInstance instance_from_json(const nlohmann::json& record) {
  if (!record.is_object()) throw ValidationError("instance record must be an object");
  PlanningInstance instance;
  if (!record.contains("goal") || !record["goal"].is_string())
    throw ValidationError("instance record is missing string field \"goal\"");
  instance.goal.text = trim(record["goal"].get<std::string>());
  if (record.contains("id")) {
    const auto& id = record["id"];
    instance.goal.id = id.is_string() ? id.get<std::string>() : id.dump();
  }
  instance.kind = record.contains("kind") ? task_kind_from_string(record["kind"].get<std::string>())
                                          : TaskKind::planning;
  if (record.contains("condition") && !record["condition"].is_null())
    instance.condition = Condition{trim(record["condition"].get<std::string>()), std::nullopt};
  if (record.contains("initial_plan") && !record["initial_plan"].is_null())
    instance.initial_plan = plan_from_json(record["initial_plan"]);
  if (record.contains("plan") && !record["plan"].is_null()) {
    instance.plan = plan_from_json(record["plan"]);
    instance.plan->terminal = true;
  }
  validate(instance);
  return instance;
}

}  // namespace stepplan
