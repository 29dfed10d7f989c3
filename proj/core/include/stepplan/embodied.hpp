#pragma once

// Embodied evaluation: ground natural-language steps to the nearest executable
// action, simulate programs in a small symbolic household environment, and
// compare programs by longest common subsequence.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stepplan/plan.hpp"

namespace stepplan {

struct Action {
  std::string verb;
  std::vector<std::string> args;

  /// "Verb(arg1, arg2)"
  std::string to_string() const;
  static Action parse(std::string_view text);

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

using ActionProgram = std::vector<Action>;

/// A predicate over one object. `arg` indexes the action's arguments; when
/// `object` is set the literal refers to that fixed object instead.
struct Literal {
  int arg = 0;
  std::string object;
  std::string predicate;
  bool value = true;
};

struct VerbSpec {
  std::string name;
  int arity = 0;
  std::string surface_template;  // "{0}", "{1}" are replaced by object names
  std::vector<std::string> slots;  // per argument: predicate the object must have initially ("" = any)
  std::vector<Literal> preconditions;
  std::vector<Literal> effects;
};

struct ObjectSpec {
  std::string id;
  std::string name;  // surface form
  std::map<std::string, bool> state;
};

using WorldState = std::map<std::string, std::map<std::string, bool>>;

struct ExecResult {
  bool executable = true;
  std::optional<std::size_t> first_failure;  // 1-based index of the first failing action
};

class MiniEnv {
 public:
  static MiniEnv from_json(const nlohmann::json& doc);
  static MiniEnv load(const std::filesystem::path& path);

  const std::vector<ObjectSpec>& objects() const noexcept { return objects_; }
  const std::vector<VerbSpec>& verbs() const noexcept { return verbs_; }
  const VerbSpec& verb(std::string_view name) const;
  const ObjectSpec& object(std::string_view id) const;
  bool has_object(std::string_view id) const { return object_index_.count(std::string(id)) > 0; }

  WorldState initial_state() const;

  /// Throws ValidationError for unknown verbs/objects or arity mismatches.
  void check(const Action& action) const;
  bool applicable(const WorldState& state, const Action& action) const;
  void apply(WorldState& state, const Action& action) const;

  /// Simulates the program from the initial state.
  ExecResult execute(const ActionProgram& program) const;

 private:
  bool holds(const WorldState& state, const Action& action, const Literal& lit) const;

  std::vector<ObjectSpec> objects_;
  std::vector<VerbSpec> verbs_;
  std::map<std::string, std::size_t> object_index_;
  std::map<std::string, std::size_t> verb_index_;
};

struct VocabEntry {
  Action action;
  std::string surface;
};

/// Grounded actions with unique surface forms, in verb order then object order.
class ActionVocab {
 public:
  static ActionVocab ground(const MiniEnv& env);
  explicit ActionVocab(std::vector<VocabEntry> entries);
  ActionVocab() = default;

  const std::vector<VocabEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::optional<std::string> surface_of(const Action& action) const;

 private:
  std::vector<VocabEntry> entries_;
  std::map<Action, std::size_t> by_action_;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view text) const = 0;
  /// Cosine similarity in [-1, 1]; 0 when either vector is zero.
  virtual double similarity(std::string_view a, std::string_view b) const;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Bag of lower-cased alphanumeric tokens. similarity() is the exact cosine
/// between token-count multisets; embed() hashes counts into `dimension` bins.
class TokenBagEmbedder final : public Embedder {
 public:
  explicit TokenBagEmbedder(std::size_t dimension = 4096) : dimension_(dimension) {}
  std::vector<double> embed(std::string_view text) const override;
  double similarity(std::string_view a, std::string_view b) const override;

  static std::map<std::string, int> bag(std::string_view text);

 private:
  std::size_t dimension_;
};

/// Vectors supplied from outside (e.g. a sentence-embedding model); texts
/// without a vector raise ValidationError.
class PrecomputedEmbedder final : public Embedder {
 public:
  void add(std::string text, std::vector<double> vector);
  static PrecomputedEmbedder from_jsonl(const std::vector<nlohmann::json>& records);
  std::vector<double> embed(std::string_view text) const override;

 private:
  std::map<std::string, std::vector<double>, std::less<>> vectors_;
};

struct Translation {
  Action action;
  std::string surface;
  double similarity = 0.0;
};

/// Nearest vocabulary entry by similarity (ties: vocabulary order); none when
/// the best similarity is below min_similarity.
std::optional<Translation> translate_step(std::string_view step, const ActionVocab& vocab, const Embedder& embedder,
                                          double min_similarity = 0.0);

/// Fraction of programs that execute fully.
double executability(const std::vector<ActionProgram>& programs, const MiniEnv& env);

std::size_t lcs_length(const ActionProgram& a, const ActionProgram& b);
/// LCS length / max(|a|, |b|); 1 when both are empty.
double lcs_score(const ActionProgram& predicted, const ActionProgram& gold);

struct EvalItem {
  std::string goal_id;
  Plan plan;
};

struct GoldProgram {
  std::string goal_id;
  ActionProgram program;
};

struct EvalConfig {
  double min_similarity = 0.0;
};

struct ItemReport {
  std::string goal_id;
  ActionProgram program;
  std::vector<std::optional<Translation>> translations;
  ExecResult exec;
  double lcs = 0.0;
};

struct EvalReport {
  std::vector<ItemReport> items;
  double executability = 0.0;
  double mean_lcs = 0.0;

  std::vector<nlohmann::json> records() const;
  nlohmann::json summary() const;
};

/// Items and golds must be aligned by position and goal_id.
EvalReport evaluate(const std::vector<EvalItem>& items, const MiniEnv& env, const ActionVocab& vocab,
                    const std::vector<GoldProgram>& golds, const Embedder& embedder, const EvalConfig& config = {});

std::vector<GoldProgram> golds_from_jsonl(const std::vector<nlohmann::json>& records);

}  // namespace stepplan
