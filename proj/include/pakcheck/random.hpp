#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pakcheck/fact.hpp"

namespace pak {

struct RandomPpsParams {
  std::uint64_t seed = 1;
  int max_depth = 4;          // [1,4]
  int max_branching = 3;      // [2,3]
  int num_agents = 2;         // [1,3]
  int actions_per_agent = 2;  // [1,3]
  int denominator_bound = 12;
};

namespace detail {

/// Deterministic draws independent of the standard library's distribution
/// implementations, so a seed reproduces the same tree everywhere.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : gen_(seed) {}
  /// Uniform in [0, n).
  int below(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }
  int between(int lo, int hi) { return lo + below(hi - lo + 1); }
  bool coin() { return below(2) == 0; }

  /// k positive probabilities summing to 1 with a common denominator of at
  /// most `bound`.
  std::vector<Rational> split(int k, int bound) {
    if (k == 1) return {Rational(1)};
    int den = between(std::max(k, 2), std::max(k, bound));
    // choose k-1 distinct cut points in [1, den-1]
    std::vector<int> cuts;
    while (static_cast<int>(cuts.size()) < k - 1) {
      int c = between(1, den - 1);
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<Rational> out;
    int prev = 0;
    for (int c : cuts) {
      out.emplace_back(c - prev, den);
      prev = c;
    }
    out.emplace_back(den - prev, den);
    return out;
  }

  /// `k` distinct indices from [0, n), in increasing order.
  std::vector<int> choose(int n, int k) {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(between(i, n - 1))]);
    all.resize(static_cast<std::size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline std::string agent_name(int k) { return "p" + std::to_string(k); }
inline std::string agent_action(int agent, int round, int m) {
  return "p" + std::to_string(agent) + "_t" + std::to_string(round) + "_a" + std::to_string(m);
}
inline std::string env_action(int round, int m) { return "e_t" + std::to_string(round) + "_" + std::to_string(m); }

}  // namespace detail

/// Random pps generated by running a random joint protocol. Each agent's
/// action distribution is a function of its local state (memoized on first
/// visit); actions are tagged by round, so every action that occurs is proper.
/// At round t only agent t mod n may mix, and the environment mixes only when
/// the agent does not exceed the branching budget.
inline PpsTree random_pps(const RandomPpsParams& params) {
  if (params.max_depth < 1 || params.max_depth > 4 || params.max_branching < 2 || params.max_branching > 3 ||
      params.num_agents < 1 || params.num_agents > 3 || params.actions_per_agent < 1 || params.actions_per_agent > 3 ||
      params.denominator_bound < 3)
    throw Error("random pps parameters out of range");
  detail::Draw draw(params.seed);
  const int horizon = draw.between(1, params.max_depth);
  const int n = params.num_agents;

  std::vector<std::string> agents;
  ActionAlphabet alphabet;
  for (int a = 0; a < n; ++a) {
    agents.push_back(detail::agent_name(a));
    auto& acts = alphabet[agents.back()];
    for (int t = 0; t < horizon; ++t)
      for (int m = 0; m < params.actions_per_agent; ++m) acts.insert(detail::agent_action(a, t, m));
  }
  auto& env_acts = alphabet[kEnv];
  for (int t = 0; t < horizon; ++t)
    for (int m = 0; m < params.max_branching; ++m) env_acts.insert(detail::env_action(t, m));

  PpsTree tree(agents, alphabet);
  std::map<LocalState, std::vector<std::pair<std::string, Rational>>> protocol;

  auto agent_dist = [&](int a, const LocalState& l) -> const std::vector<std::pair<std::string, Rational>>& {
    auto it = protocol.find(l);
    if (it != protocol.end()) return it->second;
    const int t = l.time;
    const int max_support = std::min(params.max_branching, params.actions_per_agent);
    std::vector<std::pair<std::string, Rational>> dist;
    if (a == t % n && max_support >= 2 && draw.coin()) {
      int k = draw.between(2, max_support);
      auto picks = draw.choose(params.actions_per_agent, k);
      auto probs = draw.split(k, params.denominator_bound);
      for (int i = 0; i < k; ++i) dist.emplace_back(detail::agent_action(a, t, picks[static_cast<std::size_t>(i)]), probs[static_cast<std::size_t>(i)]);
    } else {
      dist.emplace_back(detail::agent_action(a, t, draw.below(params.actions_per_agent)), Rational(1));
    }
    return protocol.emplace(l, std::move(dist)).first->second;
  };

  auto expand = [&](auto&& self, int v) -> void {
    const Node node = tree.node(v);
    const int t = node.depth;
    if (t == horizon) return;

    // joint distribution: agents in order, then the environment
    std::vector<std::vector<std::pair<std::string, Rational>>> choices;
    std::size_t agent_support = 1;
    for (int a = 0; a < n; ++a) {
      choices.push_back(agent_dist(a, node.state.locals.at(agents[static_cast<std::size_t>(a)])));
      agent_support *= choices.back().size();
    }
    int env_room = params.max_branching / static_cast<int>(agent_support);
    std::vector<std::pair<std::string, Rational>> env;
    if (env_room >= 2 && draw.coin()) {
      int k = draw.between(2, env_room);
      auto probs = draw.split(k, params.denominator_bound);
      for (int m = 0; m < k; ++m) env.emplace_back(detail::env_action(t, m), probs[static_cast<std::size_t>(m)]);
    } else {
      env.emplace_back(detail::env_action(t, 0), Rational(1));
    }
    choices.push_back(std::move(env));

    std::vector<std::pair<std::vector<std::string>, Rational>> joints{{{}, Rational(1)}};
    for (const auto& c : choices) {
      std::vector<std::pair<std::vector<std::string>, Rational>> next;
      for (const auto& [acts, p] : joints)
        for (const auto& [act, q] : c) {
          auto extended = acts;
          extended.push_back(act);
          next.emplace_back(std::move(extended), p * q);
        }
      joints = std::move(next);
    }

    std::vector<int> kids;
    for (std::size_t k = 0; k < joints.size(); ++k) {
      const auto& [acts, p] = joints[k];
      GlobalState g = node.state;
      std::vector<HistoryRecord> round;
      for (int a = 0; a < n; ++a) round.push_back({t, agents[static_cast<std::size_t>(a)], acts[static_cast<std::size_t>(a)]});
      round.push_back({t, kEnv, acts.back()});
      std::sort(round.begin(), round.end());
      g.env.history.insert(g.env.history.end(), round.begin(), round.end());
      g.env.vars["e"] = std::int64_t{draw.below(2)};
      for (auto& [name, l] : g.locals) {
        l.time = t + 1;
        l.vars["o"] = std::int64_t{draw.below(2)};
      }
      kids.push_back(tree.add_node(v, node.id + "/" + std::to_string(k), p, std::move(g)));
    }
    for (int c : kids) self(self, c);
  };

  const int initial = draw.between(1, params.max_branching);
  auto probs = draw.split(initial, params.denominator_bound);
  std::vector<int> roots;
  for (int k = 0; k < initial; ++k) {
    GlobalState g;
    g.env.vars = {{"init", std::int64_t{k}}, {"e", std::int64_t{draw.below(2)}}};
    for (const auto& a : agents)
      g.locals.emplace(a, LocalState{a, 0, {{"x", std::int64_t{draw.below(2)}}, {"o", std::int64_t{0}}}});
    roots.push_back(tree.add_node(PpsTree::kRoot, "s" + std::to_string(k), probs[static_cast<std::size_t>(k)], std::move(g)));
  }
  for (int v : roots) expand(expand, v);
  return tree;
}

/// Random fact over the tree's agents, actions and variables. `ever` appears
/// only at the top level.
inline Fact random_fact(const PpsTree& tree, std::mt19937_64& gen, int depth = 3) {
  detail::Draw draw(gen());
  const auto& agents = tree.agents();
  const int horizon = tree.horizon();

  auto atom = [&]() -> Fact {
    switch (draw.below(6)) {
      case 0:
      case 1: {
        const std::string& a = agents[static_cast<std::size_t>(draw.below(static_cast<int>(agents.size())))];
        const auto& acts = tree.actions().at(a);
        if (acts.empty()) return Fact::truth();
        auto it = acts.begin();
        std::advance(it, draw.below(static_cast<int>(acts.size())));
        return Fact::performs(a, *it);
      }
      case 2:
      case 3: {
        const std::string& a = agents[static_cast<std::size_t>(draw.below(static_cast<int>(agents.size())))];
        return Fact::var_eq(a, draw.coin() ? "x" : "o", std::int64_t{draw.below(2)});
      }
      case 4: return Fact::envvar_eq(draw.coin() ? "e" : "init", std::int64_t{draw.below(2)});
      default:
        if (draw.below(3) == 0) return draw.coin() ? Fact::truth() : Fact::falsity();
        return Fact::time_eq(draw.between(0, horizon));
    }
  };
  auto build = [&](auto&& self, int d) -> Fact {
    if (d == 0 || draw.below(3) == 0) return atom();
    switch (draw.below(4)) {
      case 0: return Fact::negate(self(self, d - 1));
      case 1: return Fact::both(self(self, d - 1), self(self, d - 1));
      case 2: return Fact::either(self(self, d - 1), self(self, d - 1));
      default: return Fact::implies(self(self, d - 1), self(self, d - 1));
    }
  };
  Fact f = build(build, depth);
  if (draw.below(6) == 0) f = Fact::ever(std::move(f));
  return f;
}

}  // namespace pak
