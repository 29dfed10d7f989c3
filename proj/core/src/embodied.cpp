#include "stepplan/embodied.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"
#include "stepplan/rng.hpp"

namespace stepplan {
namespace {

using nlohmann::json;

Literal literal_from_json(const json& j) {
  Literal l;
  if (j.contains("object")) {
    l.object = j["object"].get<std::string>();
    l.arg = -1;
  } else {
    l.arg = j.value("arg", 0);
  }
  l.predicate = j.at("pred").get<std::string>();
  l.value = j.value("value", true);
  return l;
}

std::string render_surface(const VerbSpec& verb, const std::vector<const ObjectSpec*>& args) {
  std::string out;
  const auto& t = verb.surface_template;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '{') {
      const auto close = t.find('}', i);
      const int idx = std::stoi(t.substr(i + 1, close - i - 1));
      out += args.at(static_cast<std::size_t>(idx))->name;
      i = close;
    } else {
      out += t[i];
    }
  }
  return out;
}

}  // namespace

std::string Action::to_string() const {
  std::string out = verb + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i];
  }
  return out + ")";
}

Action Action::parse(std::string_view text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')' || open == 0)
    throw ParseError("malformed action \"" + s + "\"; expected Verb(arg, ...)");
  Action a;
  a.verb = trim(std::string_view(s).substr(0, open));
  const std::string inner = trim(std::string_view(s).substr(open + 1, s.size() - open - 2));
  if (!inner.empty()) {
    std::size_t pos = 0;
    while (pos <= inner.size()) {
      auto comma = inner.find(',', pos);
      if (comma == std::string::npos) comma = inner.size();
      std::string arg = trim(std::string_view(inner).substr(pos, comma - pos));
      if (arg.empty()) throw ParseError("empty argument in action \"" + s + "\"");
      a.args.push_back(std::move(arg));
      pos = comma + 1;
    }
  }
  return a;
}

MiniEnv MiniEnv::from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", std::string{}) != "stepplan-minienv")
    throw ValidationError("environment fixture: format must be \"stepplan-minienv\"");
  if (doc.value("version", 0) != 1) throw ValidationError("environment fixture: unsupported version");

  MiniEnv env;
  try {
    for (const auto& o : doc.at("objects")) {
      ObjectSpec spec;
      spec.id = o.at("id").get<std::string>();
      spec.name = o.value("name", spec.id);
      if (o.contains("state")) spec.state = o["state"].get<std::map<std::string, bool>>();
      if (!env.object_index_.emplace(spec.id, env.objects_.size()).second)
        throw ValidationError("duplicate object id \"" + spec.id + "\"");
      env.objects_.push_back(std::move(spec));
    }
    for (const auto& v : doc.at("verbs")) {
      VerbSpec spec;
      spec.name = v.at("name").get<std::string>();
      spec.arity = v.value("arity", 0);
      spec.surface_template = v.at("template").get<std::string>();
      spec.slots = v.value("slots", std::vector<std::string>{});
      spec.slots.resize(static_cast<std::size_t>(spec.arity));
      for (const auto& l : v.value("preconditions", json::array())) spec.preconditions.push_back(literal_from_json(l));
      for (const auto& l : v.value("effects", json::array())) spec.effects.push_back(literal_from_json(l));
      for (const auto* list : {&spec.preconditions, &spec.effects})
        for (const auto& l : *list) {
          if (l.arg >= spec.arity) throw ValidationError("verb " + spec.name + " references argument out of range");
          if (l.arg < 0 && !env.object_index_.count(l.object))
            throw ValidationError("verb " + spec.name + " references unknown object \"" + l.object + "\"");
        }
      if (!env.verb_index_.emplace(spec.name, env.verbs_.size()).second)
        throw ValidationError("duplicate verb \"" + spec.name + "\"");
      env.verbs_.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("environment fixture: ") + e.what());
  }
  return env;
}

MiniEnv MiniEnv::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

const VerbSpec& MiniEnv::verb(std::string_view name) const {
  auto it = verb_index_.find(std::string(name));
  if (it == verb_index_.end()) throw ValidationError("unknown verb \"" + std::string(name) + "\"");
  return verbs_[it->second];
}

const ObjectSpec& MiniEnv::object(std::string_view id) const {
  auto it = object_index_.find(std::string(id));
  if (it == object_index_.end()) throw ValidationError("unknown object \"" + std::string(id) + "\"");
  return objects_[it->second];
}

WorldState MiniEnv::initial_state() const {
  WorldState s;
  for (const auto& o : objects_) s[o.id] = o.state;
  return s;
}

void MiniEnv::check(const Action& action) const {
  const auto& v = verb(action.verb);
  if (static_cast<int>(action.args.size()) != v.arity)
    throw ValidationError(action.to_string() + ": " + v.name + " takes " + std::to_string(v.arity) + " argument(s)");
  for (const auto& a : action.args) object(a);
}

bool MiniEnv::holds(const WorldState& state, const Action& action, const Literal& lit) const {
  const std::string& obj = lit.arg < 0 ? lit.object : action.args.at(static_cast<std::size_t>(lit.arg));
  const auto& preds = state.at(obj);
  auto it = preds.find(lit.predicate);
  const bool current = it != preds.end() && it->second;
  return current == lit.value;
}

bool MiniEnv::applicable(const WorldState& state, const Action& action) const {
  check(action);
  const auto& v = verb(action.verb);
  for (std::size_t i = 0; i < v.slots.size(); ++i) {
    if (v.slots[i].empty()) continue;
    const auto& initial = object(action.args[i]).state;
    auto it = initial.find(v.slots[i]);
    if (it == initial.end() || !it->second) return false;
  }
  return std::all_of(v.preconditions.begin(), v.preconditions.end(),
                     [&](const Literal& l) { return holds(state, action, l); });
}

void MiniEnv::apply(WorldState& state, const Action& action) const {
  const auto& v = verb(action.verb);
  for (const auto& l : v.effects) {
    const std::string& obj = l.arg < 0 ? l.object : action.args.at(static_cast<std::size_t>(l.arg));
    state[obj][l.predicate] = l.value;
  }
}

ExecResult MiniEnv::execute(const ActionProgram& program) const {
  for (const auto& a : program) check(a);
  ExecResult r;
  WorldState state = initial_state();
  for (std::size_t i = 0; i < program.size(); ++i) {
    if (!applicable(state, program[i])) {
      r.executable = false;
      r.first_failure = i + 1;
      return r;
    }
    apply(state, program[i]);
  }
  return r;
}

ActionVocab::ActionVocab(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> surfaces;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!surfaces.insert(entries_[i].surface).second)
      throw ValidationError("duplicate action surface form \"" + entries_[i].surface + "\"");
    by_action_.emplace(entries_[i].action, i);
  }
}

ActionVocab ActionVocab::ground(const MiniEnv& env) {
  std::vector<VocabEntry> entries;
  for (const auto& v : env.verbs()) {
    // Enumerate argument tuples in object order, filtered by slot predicates.
    std::vector<std::vector<const ObjectSpec*>> choices(static_cast<std::size_t>(v.arity));
    for (int a = 0; a < v.arity; ++a)
      for (const auto& o : env.objects()) {
        const auto& slot = v.slots[static_cast<std::size_t>(a)];
        if (slot.empty()) {
          if (o.id != "agent") choices[static_cast<std::size_t>(a)].push_back(&o);
          continue;
        }
        auto it = o.state.find(slot);
        if (it != o.state.end() && it->second) choices[static_cast<std::size_t>(a)].push_back(&o);
      }
    std::vector<std::size_t> cursor(static_cast<std::size_t>(v.arity), 0);
    bool done = std::any_of(choices.begin(), choices.end(), [](const auto& c) { return c.empty(); });
    while (!done) {
      std::vector<const ObjectSpec*> args;
      Action action{v.name, {}};
      for (std::size_t a = 0; a < cursor.size(); ++a) {
        args.push_back(choices[a][cursor[a]]);
        action.args.push_back(choices[a][cursor[a]]->id);
      }
      entries.push_back(VocabEntry{action, render_surface(v, args)});
      std::size_t a = cursor.size();
      while (a > 0) {
        --a;
        if (++cursor[a] < choices[a].size()) break;
        cursor[a] = 0;
        if (a == 0) done = true;
      }
      if (cursor.empty()) done = true;
    }
  }
  return ActionVocab(std::move(entries));
}

std::optional<std::string> ActionVocab::surface_of(const Action& action) const {
  auto it = by_action_.find(action);
  if (it == by_action_.end()) return std::nullopt;
  return entries_[it->second].surface;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double Embedder::similarity(std::string_view a, std::string_view b) const { return cosine(embed(a), embed(b)); }

std::map<std::string, int> TokenBagEmbedder::bag(std::string_view text) {
  std::map<std::string, int> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      ++out[cur];
      cur.clear();
    }
  }
  if (!cur.empty()) ++out[cur];
  return out;
}

std::vector<double> TokenBagEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  for (const auto& [tok, count] : bag(text)) v[hash_text(tok) % dimension_] += count;
  return v;
}

double TokenBagEmbedder::similarity(std::string_view a, std::string_view b) const {
  const auto ba = bag(a);
  const auto bb = bag(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [tok, c] : ba) {
    na += static_cast<double>(c) * c;
    auto it = bb.find(tok);
    if (it != bb.end()) dot += static_cast<double>(c) * it->second;
  }
  for (const auto& [tok, c] : bb) nb += static_cast<double>(c) * c;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb)));
}

void PrecomputedEmbedder::add(std::string text, std::vector<double> vector) {
  vectors_[std::move(text)] = std::move(vector);
}

PrecomputedEmbedder PrecomputedEmbedder::from_jsonl(const std::vector<json>& records) {
  PrecomputedEmbedder e;
  for (const auto& r : records) e.add(r.at("text").get<std::string>(), r.at("vector").get<std::vector<double>>());
  return e;
}

std::vector<double> PrecomputedEmbedder::embed(std::string_view text) const {
  auto it = vectors_.find(text);
  if (it == vectors_.end()) throw ValidationError("no precomputed embedding for \"" + std::string(text) + "\"");
  return it->second;
}

std::optional<Translation> translate_step(std::string_view step, const ActionVocab& vocab, const Embedder& embedder,
                                          double min_similarity) {
  if (vocab.size() == 0) throw ValidationError("action vocabulary is empty");
  std::size_t best = 0;
  double best_sim = -2.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const double s = embedder.similarity(step, vocab.entries()[i].surface);
    if (s > best_sim) {
      best_sim = s;
      best = i;
    }
  }
  if (best_sim < min_similarity) return std::nullopt;
  return Translation{vocab.entries()[best].action, vocab.entries()[best].surface, best_sim};
}

double executability(const std::vector<ActionProgram>& programs, const MiniEnv& env) {
  if (programs.empty()) return 1.0;
  std::size_t ok = 0;
  for (const auto& p : programs) ok += env.execute(p).executable ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(programs.size());
}

std::size_t lcs_length(const ActionProgram& a, const ActionProgram& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double lcs_score(const ActionProgram& predicted, const ActionProgram& gold) {
  const std::size_t longest = std::max(predicted.size(), gold.size());
  if (longest == 0) return 1.0;
  return static_cast<double>(lcs_length(predicted, gold)) / static_cast<double>(longest);
}

EvalReport evaluate(const std::vector<EvalItem>& items, const MiniEnv& env, const ActionVocab& vocab,
                    const std::vector<GoldProgram>& golds, const Embedder& embedder, const EvalConfig& config) {
  if (items.size() != golds.size())
    throw ValidationError("evaluate: " + std::to_string(items.size()) + " plans but " + std::to_string(golds.size()) +
                          " gold programs");
  EvalReport report;
  double exec_sum = 0.0, lcs_sum = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].goal_id != golds[i].goal_id)
      throw ValidationError("evaluate: item " + std::to_string(i) + " has goal_id \"" + items[i].goal_id +
                            "\" but gold has \"" + golds[i].goal_id + "\"");
    ItemReport r;
    r.goal_id = items[i].goal_id;
    for (const auto& step : items[i].plan.steps) {
      auto t = translate_step(step.text, vocab, embedder, config.min_similarity);
      if (t) r.program.push_back(t->action);
      r.translations.push_back(std::move(t));
    }
    r.exec = env.execute(r.program);
    r.lcs = lcs_score(r.program, golds[i].program);
    exec_sum += r.exec.executable ? 1.0 : 0.0;
    lcs_sum += r.lcs;
    report.items.push_back(std::move(r));
  }
  if (!items.empty()) {
    report.executability = exec_sum / static_cast<double>(items.size());
    report.mean_lcs = lcs_sum / static_cast<double>(items.size());
  }
  return report;
}

std::vector<json> EvalReport::records() const {
  std::vector<json> out;
  for (const auto& r : items) {
    json program = json::array();
    for (const auto& a : r.program) program.push_back(a.to_string());
    json rec = {{"goal_id", r.goal_id},
                {"executability", r.exec.executable ? 1.0 : 0.0},
                {"lcs", r.lcs},
                {"program", program}};
    rec["first_failure"] = r.exec.first_failure ? json(*r.exec.first_failure) : json(nullptr);
    out.push_back(std::move(rec));
  }
  return out;
}

json EvalReport::summary() const {
  return {{"items", items.size()}, {"executability", executability}, {"mean_lcs", mean_lcs}};
}

std::vector<GoldProgram> golds_from_jsonl(const std::vector<json>& records) {
  std::vector<GoldProgram> out;
  for (const auto& r : records) {
    GoldProgram g;
    g.goal_id = r.at("goal_id").is_string() ? r["goal_id"].get<std::string>() : r["goal_id"].dump();
    for (const auto& a : r.at("program")) g.program.push_back(Action::parse(a.get<std::string>()));
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace stepplan
