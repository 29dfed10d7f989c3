#include "stepplan/mock_world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"
#include "stepplan/rng.hpp"

namespace stepplan {
namespace {

struct Option {
  std::string text;
  double prob;
  std::size_t order;  // fixture order; end-of-plan sorts last
  bool terminal;
};

std::vector<Option> options_at(const MockWorld& world, std::optional<std::size_t> id) {
  std::vector<Option> out;
  if (!id) {
    out.push_back(Option{"", 1.0, 0, true});
    return out;
  }
  const auto& node = world.node(*id);
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const auto& c = world.node(node.children[i]);
    out.push_back(Option{c.step, c.prob, i, false});
  }
  const double rest = world.residual(*id);
  if (rest > 0.0) out.push_back(Option{"", rest, node.children.size(), true});
  std::stable_sort(out.begin(), out.end(), [](const Option& a, const Option& b) { return a.prob > b.prob; });
  return out;
}

StepCandidate to_candidate(const Option& o) {
  return StepCandidate{o.text, std::log(o.prob), 1, o.terminal};
}

std::uint64_t prefix_seed(std::uint64_t seed, const std::vector<std::string>& prefix) {
  std::uint64_t h = mix_seed(seed, prefix.size());
  for (const auto& s : prefix) h = mix_seed(h, hash_text(s));
  return h;
}

class MockProposer final : public Proposer {
 public:
  explicit MockProposer(std::shared_ptr<const MockWorld> w) : world_(std::move(w)) {}
  std::vector<StepCandidate> propose(const PlanningInstance&, const std::vector<std::string>& prefix, int n,
                                     const DecodingMethod& method) const override {
    return mock_propose(*world_, prefix, n, method);
  }

 private:
  std::shared_ptr<const MockWorld> world_;
};

class MockLikelihood final : public LikelihoodModel {
 public:
  explicit MockLikelihood(std::shared_ptr<const MockWorld> w) : world_(std::move(w)) {}
  Likelihood loglik(const PlanningInstance&, const std::vector<std::string>& steps) const override {
    return mock_likelihood(*world_, steps);
  }

 private:
  std::shared_ptr<const MockWorld> world_;
};

class MockVerifier final : public Verifier {
 public:
  explicit MockVerifier(std::shared_ptr<const MockWorld> w) : world_(std::move(w)) {}
  double verify(const Goal&, const std::vector<std::string>& prefix, const std::string& candidate) const override {
    return mock_verify(*world_, prefix, candidate);
  }

 private:
  std::shared_ptr<const MockWorld> world_;
};

class MockCompletion final : public CompletionModel {
 public:
  explicit MockCompletion(std::shared_ptr<const MockWorld> w) : world_(std::move(w)) {}
  std::string complete(const std::string& prompt, const SamplingParams&) const override {
    return mock_complete(*world_, prompt);
  }

 private:
  std::shared_ptr<const MockWorld> world_;
};

void check_unit(double v, const std::string& what, bool allow_zero) {
  const bool ok = std::isfinite(v) && v <= 1.0 && (allow_zero ? v >= 0.0 : v > 0.0);
  if (!ok) throw ValidationError(what + " out of range: " + std::to_string(v));
}

}  // namespace

MockWorld::MockWorld() {
  nodes_.push_back(MockNode{});
  child_index_.emplace_back();
}

void MockWorld::set_default_validity(double v) {
  check_unit(v, "default_validity", true);
  default_validity_ = v;
}

std::size_t MockWorld::add(const std::vector<std::string>& parent_path, std::string step, double prob,
                           double validity) {
  auto parent = find(parent_path);
  if (!parent) {
    std::string joined;
    for (const auto& p : parent_path) joined += "/" + p;
    throw ValidationError("mock world parent path not found: " + joined);
  }
  step = normalize_step_text(step);
  check_unit(prob, "prob of \"" + step + "\"", false);
  check_unit(validity, "validity of \"" + step + "\"", true);
  if (child_index_[*parent].count(step))
    throw ValidationError("duplicate sibling step \"" + step + "\"");

  // Validate before mutating so a rejected add leaves the world untouched.
  double mass = prob;
  for (auto c : nodes_[*parent].children) mass += nodes_[c].prob;
  if (mass > 1.0 + kResidualEpsilon)
    throw ValidationError("children of a node carry probability mass " + std::to_string(mass) + " > 1");

  MockNode node;
  node.step = std::move(step);
  node.prob = prob;
  node.validity = validity;
  node.parent = *parent;
  node.depth = nodes_[*parent].depth + 1;
  const std::size_t id = nodes_.size();
  child_index_[*parent].emplace(node.step, id);
  nodes_[*parent].children.push_back(id);
  nodes_.push_back(std::move(node));
  child_index_.emplace_back();

  return id;
}

std::optional<std::size_t> MockWorld::child(std::size_t parent, const std::string& step) const {
  const auto& idx = child_index_.at(parent);
  auto it = idx.find(step);
  if (it == idx.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> MockWorld::find(const std::vector<std::string>& path) const {
  std::size_t at = root();
  for (const auto& s : path) {
    auto next = child(at, s);
    if (!next) return std::nullopt;
    at = *next;
  }
  return at;
}

std::vector<std::string> MockWorld::path_of(std::size_t id) const {
  std::vector<std::string> out;
  while (id != root()) {
    out.push_back(nodes_.at(id).step);
    id = nodes_[id].parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

double MockWorld::residual(std::size_t id) const {
  double mass = 0.0;
  for (auto c : nodes_.at(id).children) mass += nodes_[c].prob;
  const double rest = 1.0 - mass;
  return rest <= kResidualEpsilon ? 0.0 : rest;
}

void MockWorld::check() const {
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    check_unit(nodes_[i].prob, "prob", false);
    check_unit(nodes_[i].validity, "validity", true);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double mass = 0.0;
    for (auto c : nodes_[i].children) mass += nodes_[c].prob;
    if (mass > 1.0 + kResidualEpsilon) throw ValidationError("child probability mass exceeds 1");
  }
}

MockWorld MockWorld::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("mock world fixture must be an object");
  if (doc.value("format", std::string{}) != "stepplan-mockworld")
    throw ValidationError("mock world fixture: format must be \"stepplan-mockworld\"");
  if (doc.value("version", 0) != kMockWorldVersion)
    throw ValidationError("mock world fixture: unsupported version");

  MockWorld world;
  world.set_default_validity(doc.value("default_validity", 0.0));
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw ValidationError("mock world fixture: \"nodes\" must be an array");
  for (const auto& n : doc["nodes"]) {
    if (!n.contains("step") || !n.contains("prob"))
      throw ValidationError("mock world node requires \"step\" and \"prob\"");
    std::vector<std::string> parent;
    if (n.contains("parent")) parent = n["parent"].get<std::vector<std::string>>();
    world.add(parent, n["step"].get<std::string>(), n["prob"].get<double>(), n.value("validity", 1.0));
  }
  if (doc.contains("completions")) {
    for (const auto& c : doc["completions"])
      world.add_completion(CompletionRule{c.value("match", std::string{}), c.at("text").get<std::string>()});
  }
  return world;
}

MockWorld MockWorld::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

nlohmann::json MockWorld::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  // Breadth-first keeps every parent ahead of its children.
  std::vector<std::size_t> queue{root()};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    for (auto c : nodes_[queue[q]].children) {
      const auto& n = nodes_[c];
      nodes.push_back({{"parent", path_of(n.parent)}, {"step", n.step}, {"prob", n.prob}, {"validity", n.validity}});
      queue.push_back(c);
    }
  }
  nlohmann::json doc = {{"format", "stepplan-mockworld"},
                        {"version", kMockWorldVersion},
                        {"default_validity", default_validity_},
                        {"nodes", std::move(nodes)}};
  if (!completions_.empty()) {
    auto& arr = doc["completions"] = nlohmann::json::array();
    for (const auto& c : completions_) arr.push_back({{"match", c.match}, {"text", c.text}});
  }
  return doc;
}

std::vector<StepCandidate> mock_propose(const MockWorld& world, const std::vector<std::string>& prefix, int n,
                                        const DecodingMethod& method) {
  method.validate();
  if (n <= 0) return {};
  auto options = options_at(world, world.find(prefix));
  std::vector<StepCandidate> out;

  if (method.kind != MethodKind::nucleus) {
    const std::size_t take = std::min<std::size_t>(options.size(), static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < take; ++i) out.push_back(to_candidate(options[i]));
    return out;
  }

  // Temperature reshapes the sampling weights; reported log-probs stay those
  // of the model.
  const double inv_t = 1.0 / *method.temperature;
  std::vector<double> weights;
  weights.reserve(options.size());
  for (const auto& o : options) weights.push_back(std::pow(o.prob, inv_t));
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (auto& w : weights) w /= total;

  std::size_t keep = 0;
  double cumulative = 0.0;
  while (keep < options.size()) {
    cumulative += weights[keep++];
    if (cumulative >= *method.top_p - 1e-12) break;
  }
  options.resize(keep);
  weights.resize(keep);

  Rng rng(prefix_seed(method.seed, prefix));
  const std::size_t draws = std::min<std::size_t>(keep, static_cast<std::size_t>(n));
  for (std::size_t d = 0; d < draws; ++d) {
    const double mass = std::accumulate(weights.begin(), weights.end(), 0.0);
    const double u = rng.unit() * mass;
    double acc = 0.0;
    std::size_t pick = weights.size() - 1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    out.push_back(to_candidate(options[pick]));
    options.erase(options.begin() + static_cast<std::ptrdiff_t>(pick));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

Likelihood mock_likelihood(const MockWorld& world, const std::vector<std::string>& steps) {
  Likelihood out;
  std::size_t at = MockWorld::root();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    auto next = world.child(at, steps[i]);
    if (!next)
      throw ScorerError("path leaves the mock world at step " + std::to_string(i + 1) + ": \"" + steps[i] + "\"");
    at = *next;
    out.logprob_sum += std::log(world.node(at).prob);
    out.token_count += 1;
  }
  return out;
}

double mock_verify(const MockWorld& world, const std::vector<std::string>& prefix, const std::string& candidate) {
  auto parent = world.find(prefix);
  if (!parent) return world.default_validity();
  auto node = world.child(*parent, candidate);
  return node ? world.node(*node).validity : world.default_validity();
}

std::string mock_complete(const MockWorld& world, const std::string& prompt) {
  for (const auto& rule : world.completions())
    if (prompt.find(rule.match) != std::string::npos) return rule.text;
  return {};
}

ScorerBundle mock_bundle(std::shared_ptr<const MockWorld> world) {
  ScorerBundle b;
  b.proposer = std::make_shared<MockProposer>(world);
  b.likelihood = std::make_shared<MockLikelihood>(world);
  b.verifier = std::make_shared<MockVerifier>(world);
  b.completion = std::make_shared<MockCompletion>(world);
  return b;
}

}  // namespace stepplan
