#include "stepplan/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"
#include "stepplan/rng.hpp"

namespace stepplan {
namespace {

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    out.push_back(trim(text.substr(pos, eol - pos)));
    pos = eol + 1;
  }
  return out;
}

std::string lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  return text.size() >= prefix.size() && lower(text.substr(0, prefix.size())) == prefix;
}

// Strips list markers ("-", "*", "1.", "2)") and a leading label such as "Goal:".
std::string strip_marker(std::string line, std::string_view label) {
  line = trim(line);
  if (!line.empty() && (line[0] == '-' || line[0] == '*')) line = trim(line.substr(1));
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) line = trim(line.substr(i + 1));
  if (!label.empty() && starts_with_ci(line, label)) line = trim(line.substr(label.size()));
  return line;
}

std::string plan_block(const Plan& plan) { return render_step_lines(plan.texts()); }

std::vector<std::string> tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '\'') {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string instruction_prefix(const SlotChoice& c) {
  std::string out(kInstructionOpeners.at(c.opener));
  out += ", ";
  out += kInstructionVerbs.at(c.verb);
  out += ' ';
  out += kInstructionUnits.at(c.unit);
  out += ' ';
  out += kInstructionPurposes.at(c.purpose);
  out += ".\n\n";
  return out;
}

SlotChoice random_slots(std::uint64_t seed) {
  Rng rng(seed);
  SlotChoice c;
  c.opener = rng.below(kInstructionOpeners.size());
  c.verb = rng.below(kInstructionVerbs.size());
  c.unit = rng.below(kInstructionUnits.size());
  c.purpose = rng.below(kInstructionPurposes.size());
  return c;
}

std::string randomized_prefix(std::uint64_t seed) { return instruction_prefix(random_slots(seed)); }

std::string assemble_prompt(const PromptRecipe& recipe) {
  if (recipe.in_context.empty()) throw ValidationError("prompt recipe needs at least one exemplar");
  if (trim(recipe.target_goal).empty()) throw ValidationError("target goal must be non-empty");
  std::string out = instruction_prefix(recipe.slots);
  for (const auto& ex : recipe.in_context) {
    if (trim(ex.goal).empty()) throw ValidationError("exemplar goal must be non-empty");
    if (ex.steps.empty()) throw ValidationError("exemplar \"" + ex.goal + "\" has an empty plan");
    std::vector<std::string> steps;
    for (const auto& s : ex.steps) steps.push_back(normalize_step_text(s));
    out += "Goal: " + trim(ex.goal) + "\n" + render_step_lines(steps) + "\n\n";
  }
  out += "Goal: " + trim(recipe.target_goal) + "\nStep 1:";
  return out;
}

std::string_view to_string(GoalProvenance p) {
  switch (p) {
    case GoalProvenance::seed: return "seed";
    case GoalProvenance::generated: return "generated";
    case GoalProvenance::exemplar: return "exemplar";
  }
  return "seed";
}

GoalProvenance goal_provenance_from_string(std::string_view text) {
  if (text == "seed") return GoalProvenance::seed;
  if (text == "generated") return GoalProvenance::generated;
  if (text == "exemplar") return GoalProvenance::exemplar;
  throw ValidationError("unknown goal provenance \"" + std::string(text) + "\"");
}

std::string GoalPool::key(std::string_view text) {
  std::string out;
  for (const auto& t : lines_of(text)) {
    for (char c : t) {
      const auto u = static_cast<unsigned char>(c);
      if (std::isspace(u)) {
        if (!out.empty() && out.back() != ' ') out += ' ';
      } else {
        out += static_cast<char>(std::tolower(u));
      }
    }
    if (!out.empty() && out.back() != ' ') out += ' ';
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

bool GoalPool::add(std::string_view text, GoalProvenance provenance, int round) {
  const std::string k = key(text);
  if (k.empty() || keys_.count(k)) return false;
  keys_.emplace(k, goals_.size());
  goals_.push_back(PoolGoal{trim(text), provenance, round});
  return true;
}

std::vector<nlohmann::json> GoalPool::to_records() const {
  std::vector<nlohmann::json> out;
  for (const auto& g : goals_) out.push_back({{"text", g.text}, {"provenance", to_string(g.provenance)}, {"round", g.round}});
  return out;
}

GoalPool GoalPool::from_records(const std::vector<nlohmann::json>& records) {
  GoalPool pool;
  int max_round = 0;
  for (const auto& r : records) {
    const std::string text = r.at("text").get<std::string>();
    const auto prov = goal_provenance_from_string(r.value("provenance", std::string("seed")));
    const int round = r.value("round", 0);
    max_round = std::max(max_round, round);
    pool.add(text, prov, round);
  }
  pool.set_rounds(max_round);
  return pool;
}

GoalPool bootstrap_goals(GoalPool pool, const CompletionModel& completion, int rounds, int batch,
                         const SamplingParams& params, std::vector<BootstrapReport>* reports) {
  if (pool.size() == 0) throw ValidationError("bootstrap_goals needs a non-empty pool");
  if (rounds < 0 || batch < 1) throw ValidationError("bootstrap_goals needs rounds >= 0 and batch >= 1");

  for (int r = 0; r < rounds; ++r) {
    const int round = pool.rounds() + 1;
    BootstrapReport report;
    report.round = round;

    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(round)));
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(batch));
    for (std::size_t i = 0; i < take; ++i) std::swap(order[i], order[i + rng.below(order.size() - i)]);

    std::string prompt = "Write down new everyday goals that a person might want to achieve.\n\n";
    for (std::size_t i = 0; i < take; ++i) prompt += "Goal: " + pool.goals()[order[i]].text + "\n";
    prompt += "Goal:";

    SamplingParams call = params;
    call.seed = mix_seed(params.seed, 0x676f616cULL + static_cast<std::uint64_t>(round));
    std::string reply;
    try {
      reply = completion.complete(prompt, call);
    } catch (const std::exception& e) {
      report.error = e.what();
      if (reports) reports->push_back(report);
      continue;  // the pool is untouched for an aborted round
    }

    GoalPool next = pool;
    for (const auto& line : lines_of(reply)) {
      const std::string goal = strip_marker(line, "goal:");
      if (goal.empty()) continue;
      ++report.proposed;
      if (next.add(goal, GoalProvenance::generated, round)) ++report.added;
    }
    next.set_rounds(round);
    pool = std::move(next);
    if (reports) reports->push_back(report);
  }
  return pool;
}

ConditionCategory categorize_condition(std::string_view text) {
  struct Family {
    ConditionCategory category;
    std::set<std::string> words;
  };
  static const std::vector<Family> families = {
      {ConditionCategory::location,
       {"store", "stores", "shop", "closed", "nearby", "local", "studio", "park", "outdoors", "outside", "indoors",
        "room", "office", "city", "town", "location", "area", "place", "abroad", "beach", "gym", "library"}},
      {ConditionCategory::equipment,
       {"tool", "tools", "laptop", "computer", "clay", "equipment", "machine", "device", "oven", "phone", "printer",
        "internet", "ladder", "car", "vehicle", "supplies", "kit", "brush", "knife", "stove"}},
      {ConditionCategory::safety,
       {"heavy", "fragile", "breaks", "broken", "hot", "sharp", "danger", "dangerous", "unsafe", "injury",
        "injured", "gas", "burn", "slippery", "accident", "fire", "toxic", "storm", "emergency", "electric"}},
      {ConditionCategory::user_specification,
       {"unable", "size", "specific", "allergic", "prefer", "budget", "afford", "vegetarian", "vegan", "disabled",
        "cannot", "can't", "beginner", "elderly", "pregnant", "schedule", "deadline", "limited"}},
  };
  const auto toks = tokens(text);
  ConditionCategory best = ConditionCategory::other;
  int best_hits = 0;
  for (const auto& f : families) {
    int hits = 0;
    for (const auto& t : toks) hits += static_cast<int>(f.words.count(t));
    if (hits > best_hits) {
      best_hits = hits;
      best = f.category;
    }
  }
  return best;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string body;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t eol = tmpl.find('\n', pos);
    const bool last = eol == std::string_view::npos;
    if (last) eol = tmpl.size();
    const std::string_view line = tmpl.substr(pos, eol - pos);
    if (line.empty() || line.front() != '#') {
      body.append(line);
      if (!last) body += '\n';
    }
    pos = eol + 1;
  }

  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') {
      out += body[i];
      continue;
    }
    const std::size_t close = body.find('}', i);
    if (close == std::string::npos) throw ValidationError("unterminated placeholder in template");
    const std::string name = body.substr(i + 1, close - i - 1);
    auto it = values.find(name);
    if (it == values.end()) throw ValidationError("template placeholder {" + name + "} has no value");
    out += it->second;
    i = close;
  }
  return out;
}

std::string load_template(const std::filesystem::path& path) { return read_text(path); }

std::vector<Condition> sample_conditions(const Goal& goal, const Plan& plan, const CompletionModel& completion,
                                         std::string_view prompt_template, const SamplingParams& params,
                                         std::vector<std::string>* warnings) {
  if (plan.empty()) throw ValidationError("sample_conditions needs a non-empty plan");
  const std::string prompt = fill_template(prompt_template, {{"goal", trim(goal.text)}, {"plan", plan_block(plan)}});
  const std::string reply = completion.complete(prompt, params);

  std::vector<Condition> out;
  std::set<std::string> seen;
  for (const auto& line : lines_of(reply)) {
    std::string text = strip_marker(line, "condition:");
    if (starts_with_ci(text, "if ")) text = trim(text.substr(3));
    while (!text.empty() && (text.back() == '.' || text.back() == ',' || text.back() == ';')) text.pop_back();
    text = trim(text);
    if (text.empty() || !seen.insert(GoalPool::key(text)).second) continue;
    out.push_back(Condition{text, categorize_condition(text)});
  }
  if (out.empty() && !trim(reply).empty() && warnings)
    warnings->push_back("no condition could be parsed from completion: " + reply);
  return out;
}

Plan sample_counterfactual(const Goal& goal, const Plan& plan, const Condition& condition,
                           const CompletionModel& completion, std::string_view prompt_template,
                           const SamplingParams& params) {
  if (trim(goal.text).empty() || plan.empty() || trim(condition.text).empty())
    throw ValidationError("sample_counterfactual needs a goal, a plan and a condition");
  const std::string prompt = fill_template(
      prompt_template, {{"goal", trim(goal.text)}, {"plan", plan_block(plan)}, {"condition", trim(condition.text)}});
  const std::string reply = completion.complete(prompt, params);
  Plan revised;
  try {
    revised = parse_plan(reply);
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + "; raw completion: " + reply);
  }
  if (revised.empty()) throw ParseError("no \"Step k:\" lines in completion; raw completion: " + reply);
  revised.terminal = true;
  return revised;
}

}  // namespace stepplan
