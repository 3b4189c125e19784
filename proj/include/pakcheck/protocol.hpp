#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pakcheck/model.hpp"

namespace pak {

/// Distribution over a participant's actions; a single entry is a
/// deterministic step.
using ActionDistribution = std::vector<std::pair<std::string, Rational>>;

/// Equality test on a variable owned by an agent or by the environment.
struct VarCondition {
  std::string scope;  // agent id or "env"
  std::string var;
  Value value;
  friend bool operator==(const VarCondition&, const VarCondition&) = default;
};

/// Test on the environment's history: `agent` performed `action` at `time`.
struct HistoryCondition {
  std::string agent;
  std::string action;
  int time = 0;
  friend bool operator==(const HistoryCondition&, const HistoryCondition&) = default;
};

/// Conjunction of equality tests. `actions` is only meaningful in
/// transition rules, where it constrains the joint action.
struct Guard {
  std::optional<int> time;
  std::vector<VarCondition> vars;
  std::vector<HistoryCondition> performed;
  std::map<std::string, std::string> actions;
  friend bool operator==(const Guard&, const Guard&) = default;
};

struct ActionRule {
  Guard guard;
  ActionDistribution dist;
  friend bool operator==(const ActionRule&, const ActionRule&) = default;
};

struct Assignment {
  std::string scope;  // agent id or "env"
  std::string var;
  Value value;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct TransitionRule {
  Guard guard;
  std::vector<Assignment> assign;
  friend bool operator==(const TransitionRule&, const TransitionRule&) = default;
};

/// An initial global state (time 0, empty history) with its probability.
struct InitialState {
  std::string id;
  Rational prob;
  VarMap env;
  std::map<std::string, VarMap> locals;
  friend bool operator==(const InitialState&, const InitialState&) = default;
};

/// Finite-table joint protocol. Rule lists use first-match semantics; a
/// participant with no matching rule skips.
struct ProtocolSpec {
  std::vector<std::string> agents;
  int horizon = 1;
  std::vector<InitialState> initial;
  std::map<std::string, std::vector<ActionRule>> agent_rules;
  std::vector<ActionRule> env_rules;
  std::vector<TransitionRule> transitions;
  friend bool operator==(const ProtocolSpec&, const ProtocolSpec&) = default;
};

namespace detail {

inline const Value* lookup(const GlobalState& g, const std::string& scope, const std::string& var) {
  const VarMap* m = nullptr;
  if (scope == kEnv) {
    m = &g.env.vars;
  } else {
    auto it = g.locals.find(scope);
    if (it == g.locals.end()) return nullptr;
    m = &it->second.vars;
  }
  auto it = m->find(var);
  return it == m->end() ? nullptr : &it->second;
}

inline bool matches(const Guard& guard, const GlobalState& g, int time,
                    const std::map<std::string, std::string>* joint = nullptr) {
  if (guard.time && *guard.time != time) return false;
  for (const auto& c : guard.vars) {
    const Value* v = lookup(g, c.scope, c.var);
    if (!v || !(*v == c.value)) return false;
  }
  for (const auto& h : guard.performed) {
    HistoryRecord rec{h.time, h.agent, h.action};
    if (std::find(g.env.history.begin(), g.env.history.end(), rec) == g.env.history.end()) return false;
  }
  if (!guard.actions.empty()) {
    if (!joint) return false;
    for (const auto& [who, act] : guard.actions) {
      auto it = joint->find(who);
      if (it == joint->end() || it->second != act) return false;
    }
  }
  return true;
}

inline std::string describe(const GlobalState& g, int time) {
  std::string s = "t=" + std::to_string(time) + " env{";
  bool first = true;
  for (const auto& [k, v] : g.env.vars) {
    s += (first ? "" : ",") + k + "=" + to_string(v);
    first = false;
  }
  s += "}";
  for (const auto& [a, l] : g.locals) s += " " + to_string(l);
  return s;
}

inline void check_distribution(const ActionDistribution& d, const std::string& rule_name) {
  if (d.empty()) throw Error(rule_name + ": empty action distribution");
  Rational sum(0);
  std::set<std::string> seen;
  for (const auto& [act, p] : d) {
    if (p <= Rational(0)) throw Error(rule_name + ": action " + act + " has non-positive probability " + p.str());
    if (!seen.insert(act).second) throw Error(rule_name + ": action " + act + " listed twice");
    sum += p;
  }
  if (sum != Rational(1)) throw Error(rule_name + ": distribution sums to " + sum.str() + ", not 1");
}

}  // namespace detail

/// Well-formedness problems of a spec that can be found without building it.
inline std::vector<std::string> check_spec(const ProtocolSpec& spec) {
  std::vector<std::string> out;
  std::set<std::string> agents(spec.agents.begin(), spec.agents.end());
  if (spec.agents.empty()) out.push_back("protocol has no agents");
  if (agents.size() != spec.agents.size()) out.push_back("duplicate agent identifiers");
  if (agents.count(kEnv)) out.push_back("agent identifier \"env\" is reserved");
  if (spec.horizon < 1) out.push_back("horizon must be positive");
  if (spec.initial.empty()) out.push_back("no initial states");

  Rational sum(0);
  std::set<std::string> ids;
  for (const auto& s : spec.initial) {
    if (s.prob <= Rational(0)) out.push_back("initial state " + s.id + " has non-positive probability");
    if (!ids.insert(s.id).second) out.push_back("duplicate initial state id " + s.id);
    sum += s.prob;
    for (const auto& [a, vars] : s.locals)
      if (!agents.count(a)) out.push_back("initial state " + s.id + " names unknown agent " + a);
  }
  if (!spec.initial.empty() && sum != Rational(1)) out.push_back("initial distribution sums to " + sum.str() + ", not 1");

  auto rule_name = [](const std::string& who, std::size_t k) { return who + " rule #" + std::to_string(k); };
  for (const auto& [agent, rules] : spec.agent_rules) {
    if (!agents.count(agent)) out.push_back("rules for unknown agent " + agent);
    for (std::size_t k = 0; k < rules.size(); ++k) {
      for (const auto& c : rules[k].guard.vars)
        if (c.scope != agent) out.push_back(rule_name(agent, k) + ": guard may only test the agent's own variables");
      if (!rules[k].guard.performed.empty() || !rules[k].guard.actions.empty())
        out.push_back(rule_name(agent, k) + ": agent guards cannot test history or actions");
      try {
        detail::check_distribution(rules[k].dist, rule_name(agent, k));
      } catch (const Error& e) {
        out.emplace_back(e.what());
      }
    }
  }
  for (std::size_t k = 0; k < spec.env_rules.size(); ++k) {
    for (const auto& c : spec.env_rules[k].guard.vars)
      if (c.scope != kEnv) out.push_back(rule_name(kEnv, k) + ": env guard may only test env variables");
    if (!spec.env_rules[k].guard.actions.empty()) out.push_back(rule_name(kEnv, k) + ": env guard cannot test actions");
    try {
      detail::check_distribution(spec.env_rules[k].dist, rule_name(kEnv, k));
    } catch (const Error& e) {
      out.emplace_back(e.what());
    }
  }
  for (std::size_t k = 0; k < spec.transitions.size(); ++k) {
    for (const auto& a : spec.transitions[k].assign)
      if (a.scope != kEnv && !agents.count(a.scope))
        out.push_back("transition rule #" + std::to_string(k) + ": assignment to unknown scope " + a.scope);
  }
  return out;
}

/// Action alphabets implied by the rule tables.
inline ActionAlphabet alphabet_of(const ProtocolSpec& spec) {
  ActionAlphabet acts;
  for (const auto& a : spec.agents) acts[a];
  acts[kEnv];
  for (const auto& [agent, rules] : spec.agent_rules)
    for (const auto& r : rules)
      for (const auto& [act, p] : r.dist) acts[agent].insert(act);
  for (const auto& r : spec.env_rules)
    for (const auto& [act, p] : r.dist) acts[kEnv].insert(act);
  for (auto& [who, s] : acts) s.erase(kSkip);
  return acts;
}

/// Compiles the joint protocol into its pps tree of depth `horizon`.
inline PpsTree build_tree(const ProtocolSpec& spec) {
  if (auto problems = check_spec(spec); !problems.empty()) {
    std::string msg = "malformed protocol:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(msg);
  }
  PpsTree tree(spec.agents, alphabet_of(spec));

  struct Choice {
    std::string who;
    const ActionDistribution* dist;
  };
  static const ActionDistribution kSkipOnly{{kSkip, Rational(1)}};

  auto expand = [&](auto&& self, int v) -> void {
    const Node node = tree.node(v);  // copy: add_node may reallocate
    const int t = node.depth;
    if (t == spec.horizon) return;
    const GlobalState& g = node.state;

    std::vector<Choice> choices;
    for (const auto& agent : spec.agents) {
      const ActionDistribution* d = &kSkipOnly;
      if (auto it = spec.agent_rules.find(agent); it != spec.agent_rules.end())
        for (const auto& rule : it->second)
          if (detail::matches(rule.guard, g, t)) {
            d = &rule.dist;
            break;
          }
      choices.push_back({agent, d});
    }
    {
      const ActionDistribution* d = &kSkipOnly;
      for (const auto& rule : spec.env_rules)
        if (detail::matches(rule.guard, g, t)) {
          d = &rule.dist;
          break;
        }
      choices.push_back({kEnv, d});
    }

    std::vector<std::pair<GlobalState, Rational>> successors;
    std::map<std::string, std::string> joint;
    auto product = [&](auto&& rec, std::size_t k, const Rational& p) -> void {
      if (k == choices.size()) {
        const TransitionRule* rule = nullptr;
        for (const auto& tr : spec.transitions)
          if (detail::matches(tr.guard, g, t, &joint)) {
            rule = &tr;
            break;
          }
        if (!rule) {
          std::string acts;
          for (const auto& [who, a] : joint) acts += (acts.empty() ? "" : ", ") + who + ":" + a;
          throw Error("no transition rule covers state [" + detail::describe(g, t) + "] under joint action (" + acts + ")");
        }
        GlobalState next = g;
        for (const auto& asg : rule->assign) {
          if (asg.scope == kEnv) next.env.vars[asg.var] = asg.value;
          else next.locals.at(asg.scope).vars[asg.var] = asg.value;
        }
        for (auto& [a, l] : next.locals) l.time = t + 1;
        std::vector<HistoryRecord> round;
        for (const auto& [who, a] : joint) round.push_back({t, who, a});
        std::sort(round.begin(), round.end());
        next.env.history.insert(next.env.history.end(), round.begin(), round.end());

        auto same = std::find_if(successors.begin(), successors.end(), [&](const auto& s) { return s.first == next; });
        if (same != successors.end()) same->second += p;
        else successors.emplace_back(std::move(next), p);
        return;
      }
      for (const auto& [act, q] : *choices[k].dist) {
        joint[choices[k].who] = act;
        rec(rec, k + 1, p * q);
      }
      joint.erase(choices[k].who);
    };
    product(product, 0, Rational(1));

    std::vector<int> kids;
    for (std::size_t k = 0; k < successors.size(); ++k)
      kids.push_back(tree.add_node(v, node.id + "/" + std::to_string(k), successors[k].second, std::move(successors[k].first)));
    for (int c : kids) self(self, c);
  };

  for (const auto& init : spec.initial) {
    GlobalState g;
    g.env.vars = init.env;
    for (const auto& a : spec.agents) {
      LocalState l{a, 0, {}};
      if (auto it = init.locals.find(a); it != init.locals.end()) l.vars = it->second;
      g.locals.emplace(a, std::move(l));
    }
    int v = tree.add_node(PpsTree::kRoot, init.id, init.prob, std::move(g));
    expand(expand, v);
  }
  return tree;
}

}  // namespace pak
