#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the decoder: the oracles walk the mock tree
// directly so that a bug in the engine cannot hide behind a shared helper.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stepplan/mock_world.hpp"
#include "stepplan/verifier_data.hpp"

namespace oracle {

struct WorldShape {
  int max_depth = 5;
  int max_branching = 4;
  std::size_t max_complete = 500;
};

/// Every node with positive end-of-plan mass, except the root, ends exactly
/// one complete plan.
inline std::size_t count_complete(const stepplan::MockWorld& w) {
  std::size_t n = 0;
  for (std::size_t id = 1; id < w.size(); ++id)
    if (w.residual(id) > 0.0) ++n;
  return n;
}

inline int max_children(const stepplan::MockWorld& w) {
  int b = 0;
  for (std::size_t id = 0; id < w.size(); ++id) b = std::max<int>(b, static_cast<int>(w.node(id).children.size()));
  return b;
}

/// Seeded random tree. Uses std::mt19937 plus std::uniform_* on purpose: the
/// worlds only need to be reproducible on one toolchain, and this keeps the
/// generator independent of the library's own Rng.
inline stepplan::MockWorld random_world(std::uint32_t seed, const WorldShape& shape = {}) {
  std::mt19937 gen(seed);
  for (;;) {
    stepplan::MockWorld w;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> branch(1, shape.max_branching);
    struct Pending {
      std::vector<std::string> path;
    };
    std::vector<Pending> queue{{}};
    int counter = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const auto path = queue[q].path;
      const int depth = static_cast<int>(path.size());
      if (depth >= shape.max_depth) continue;
      // The root always branches; deeper nodes become leaves more often.
      const bool leaf = depth > 0 && u01(gen) < 0.25 + 0.1 * depth;
      if (leaf) continue;
      const int k = branch(gen);
      std::vector<double> weights(static_cast<std::size_t>(k));
      for (auto& x : weights) x = 0.05 + u01(gen);
      double end_weight = (depth > 0 && u01(gen) < 0.5) ? 0.05 + u01(gen) : 0.0;
      double total = end_weight;
      for (double x : weights) total += x;
      for (int i = 0; i < k; ++i) {
        std::string text = "act " + std::to_string(++counter) + " at depth " + std::to_string(depth + 1);
        double validity = u01(gen);
        if (u01(gen) < 0.05) validity = 0.0;  // exercises the epsilon clamp
        w.add(path, text, weights[static_cast<std::size_t>(i)] / total, validity);
        auto child = path;
        child.push_back(text);
        queue.push_back({child});
      }
    }
    const std::size_t complete = count_complete(w);
    if (complete >= 1 && complete <= shape.max_complete) return w;
  }
}

struct Scored {
  std::vector<std::string> steps;
  double value = -std::numeric_limits<double>::infinity();
  bool complete = false;
};

/// Value of the complete plan ending at `id`: the path's log-probabilities
/// plus the end-of-plan mass, normalized by steps + 1 tokens, mixed with the
/// clamped log-validity of the last step.
inline double complete_value(const stepplan::MockWorld& w, std::size_t id, double alpha, double eps) {
  double ll = std::log(w.residual(id));
  int tokens = 1;
  for (std::size_t at = id; at != stepplan::MockWorld::root(); at = w.node(at).parent) {
    ll += std::log(w.node(at).prob);
    ++tokens;
  }
  const double norm = ll / tokens;
  if (alpha >= 1.0) return norm;
  const double v = std::log(std::min(1.0, std::max(eps, w.node(id).validity)));
  return alpha * norm + (1.0 - alpha) * v;
}

/// Exhaustive argmax over every complete plan of the world.
inline Scored brute_force_best(const stepplan::MockWorld& w, double alpha, double eps = 1e-6) {
  Scored best;
  for (std::size_t id = 1; id < w.size(); ++id) {
    if (!(w.residual(id) > 0.0)) continue;
    const double v = complete_value(w, id, alpha, eps);
    if (v > best.value) best = Scored{w.path_of(id), v, true};
  }
  return best;
}

/// Plain step-wise beam search scored by length-normalized log-likelihood
/// only. Children are taken in descending probability (fixture order on
/// ties, end-of-plan last), the first n of them per beam member.
inline Scored likelihood_beam_search(const stepplan::MockWorld& w, int k, int n, int max_steps) {
  struct H {
    std::size_t node;
    double ll;
    int tokens;
    bool complete;
  };
  auto value_of = [](const H& h) { return h.ll / h.tokens; };
  std::vector<H> beam{{stepplan::MockWorld::root(), 0.0, 0, false}};
  std::vector<H> finished;
  std::optional<H> best_open;
  for (int iter = 1; iter <= max_steps + 1 && !beam.empty(); ++iter) {
    std::vector<H> pool;
    for (const auto& h : beam) {
      struct Opt {
        double p;
        std::size_t order;
        std::optional<std::size_t> child;
      };
      std::vector<Opt> opts;
      const auto& node = w.node(h.node);
      for (std::size_t i = 0; i < node.children.size(); ++i)
        opts.push_back({w.node(node.children[i]).prob, i, node.children[i]});
      if (w.residual(h.node) > 0.0) opts.push_back({w.residual(h.node), node.children.size(), std::nullopt});
      std::stable_sort(opts.begin(), opts.end(), [](const Opt& a, const Opt& b) { return a.p > b.p; });
      if (opts.size() > static_cast<std::size_t>(n)) opts.resize(static_cast<std::size_t>(n));
      const int depth = node.depth;
      for (const auto& o : opts) {
        if (!o.child) {
          if (depth == 0) continue;
          pool.push_back({h.node, h.ll + std::log(o.p), h.tokens + 1, true});
        } else {
          if (depth >= max_steps) continue;
          pool.push_back({*o.child, h.ll + std::log(o.p), h.tokens + 1, false});
        }
      }
    }
    std::stable_sort(pool.begin(), pool.end(), [&](const H& a, const H& b) { return value_of(a) > value_of(b); });
    if (pool.size() > static_cast<std::size_t>(k)) pool.resize(static_cast<std::size_t>(k));
    beam.clear();
    for (const auto& h : pool) (h.complete ? finished : beam).push_back(h);
    if (!beam.empty()) best_open = beam.front();
    if (finished.size() >= static_cast<std::size_t>(k)) break;
  }
  auto pick = [&](const std::vector<H>& hs) {
    const H* best = nullptr;
    for (const auto& h : hs)
      if (!best || value_of(h) > value_of(*best)) best = &h;
    return best;
  };
  if (const H* b = pick(finished)) return Scored{w.path_of(b->node), value_of(*b), true};
  if (best_open) return Scored{w.path_of(best_open->node), value_of(*best_open), false};
  return {};
}

/// Classical O(nm) longest common subsequence table.
template <typename T>
std::size_t lcs_dp(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  return t[a.size()][b.size()];
}

/// Independent audit: true when some choice of positions allowed for `kind`
/// reproduces (prefix, candidate) from the gold steps s.
inline bool matches_rule(const std::vector<std::string>& s, stepplan::PerturbationKind kind, const std::vector<std::string>& prefix, const std::string& cand) {
  const int T = static_cast<int>(s.size());
  auto first = [&](int n) { return std::vector<std::string>(s.begin(), s.begin() + n); };
  for (int t = 1; t <= T; ++t) {
    switch (kind) {
      case stepplan::PerturbationKind::repeat_near:
        if (t >= 2 && prefix == first(t - 1) && cand == s[t - 2]) return true;
        break;
      case stepplan::PerturbationKind::repeat_distant:
        for (int j = 1; j <= t - 2; ++j)
          if (prefix == first(t - 1) && cand == s[j - 1]) return true;
        break;
      case stepplan::PerturbationKind::missing:
        for (int tp = t + 2; tp <= T; ++tp)
          if (prefix == first(t - 1) && cand == s[tp - 1]) return true;
        break;
      case stepplan::PerturbationKind::reorder_near:
        if (t >= 2 && t + 1 <= T) {
          std::vector<std::string> p = first(t);
          std::swap(p[t - 2], p[t - 1]);
          if (prefix == p && cand == s[t]) return true;
        }
        break;
      case stepplan::PerturbationKind::reorder_distant:
        for (int i = 1; i < t; ++i)
          for (int j = i + 2; j < t; ++j) {
            std::vector<std::string> p = first(t - 1);
            std::swap(p[i - 1], p[j - 1]);
            if (prefix == p && cand == s[t - 1]) return true;
          }
        break;
    }
  }
  return false;
}

}  // namespace oracle
