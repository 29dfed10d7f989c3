#pragma once

// Deterministic in-process scorers backed by a finite tree of steps. Each node
// carries the conditional probability of its step given the parent path and a
// verifier validity; whatever probability mass the children of a node leave
// unassigned is the end-of-plan mass at that node.
//
// Fixture format (version 1), see docs/mockworld-format.md:
//   {"format": "stepplan-mockworld", "version": 1, "default_validity": 0.0,
//    "nodes": [{"parent": ["a"], "step": "b", "prob": 0.4, "validity": 0.9}, ...],
//    "completions": [{"match": "substring", "text": "reply"}]}

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stepplan/scorer.hpp"

namespace stepplan {

inline constexpr int kMockWorldVersion = 1;
/// Residual mass at or below this is treated as zero.
inline constexpr double kResidualEpsilon = 1e-9;

struct MockNode {
  std::string step;   // empty for the root
  double prob = 1.0;  // conditional probability given the parent path
  double validity = 1.0;
  std::size_t parent = 0;
  int depth = 0;
  std::vector<std::size_t> children;  // in fixture order
};

struct CompletionRule {
  std::string match;  // substring of the prompt; empty matches everything
  std::string text;
};

class MockWorld {
 public:
  MockWorld();

  static MockWorld from_json(const nlohmann::json& doc);
  static MockWorld load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Appends a child under the node reached by `parent_path`.
  std::size_t add(const std::vector<std::string>& parent_path, std::string step, double prob,
                  double validity);
  void add_completion(CompletionRule rule) { completions_.push_back(std::move(rule)); }

  static constexpr std::size_t root() { return 0; }
  const MockNode& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::optional<std::size_t> child(std::size_t parent, const std::string& step) const;
  std::optional<std::size_t> find(const std::vector<std::string>& path) const;
  std::vector<std::string> path_of(std::size_t id) const;

  /// 1 - sum of child probabilities, with tiny residue snapped to 0.
  double residual(std::size_t id) const;

  double default_validity() const noexcept { return default_validity_; }
  void set_default_validity(double v);
  const std::vector<CompletionRule>& completions() const noexcept { return completions_; }

  /// Throws ValidationError if any invariant (probabilities in (0,1], child
  /// mass <= 1, validity in [0,1], unique sibling texts) is violated.
  void check() const;

 private:
  std::vector<MockNode> nodes_;
  std::vector<std::map<std::string, std::size_t>> child_index_;
  std::vector<CompletionRule> completions_;
  double default_validity_ = 0.0;
};

/// Greedy and beam return the node's children (plus end-of-plan when the
/// residual is positive) by descending probability, ties by fixture order with
/// end-of-plan last. Nucleus samples without replacement from the smallest
/// top-p set using the method seed mixed with the prefix. Unknown prefixes
/// yield a single end-of-plan candidate with log-probability 0.
std::vector<StepCandidate> mock_propose(const MockWorld& world, const std::vector<std::string>& prefix,
                                        int n, const DecodingMethod& method);

/// Sum of ln(conditional probability) along the path; throws ScorerError
/// naming the first step that leaves the tree.
Likelihood mock_likelihood(const MockWorld& world, const std::vector<std::string>& steps);

/// Validity of the node reached by prefix + candidate, else the default.
double mock_verify(const MockWorld& world, const std::vector<std::string>& prefix,
                   const std::string& candidate);

/// First completion rule whose match occurs in the prompt; empty text if none.
std::string mock_complete(const MockWorld& world, const std::string& prompt);

ScorerBundle mock_bundle(std::shared_ptr<const MockWorld> world);

}  // namespace stepplan
