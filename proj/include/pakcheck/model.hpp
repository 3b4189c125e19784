#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_set>
#include <variant>
#include <vector>

#include "pakcheck/rational.hpp"

namespace pak {

/// Name of the environment participant in histories and rule tables.
inline constexpr const char* kEnv = "env";
/// Implicit action available to every participant.
inline constexpr const char* kSkip = "skip";

struct Symbol {
  std::string name;
  friend bool operator==(const Symbol&, const Symbol&) = default;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

/// Scalar stored in a state variable: integer, boolean or interned symbol.
using Value = std::variant<std::int64_t, bool, Symbol>;

inline std::string to_string(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return std::get<Symbol>(v).name;
}

using VarMap = std::map<std::string, Value>;

/// An agent's private information at a point. Equality is structural and
/// defines indistinguishability.
struct LocalState {
  std::string agent;
  int time = 0;
  VarMap vars;

  friend bool operator==(const LocalState&, const LocalState&) = default;
  friend bool operator<(const LocalState& a, const LocalState& b) {
    return std::tie(a.agent, a.time, a.vars) < std::tie(b.agent, b.time, b.vars);
  }
};

inline std::string to_string(const LocalState& l) {
  std::string s = l.agent + "@t" + std::to_string(l.time) + "{";
  bool first = true;
  for (const auto& [k, v] : l.vars) {
    if (!first) s += ",";
    first = false;
    s += k + "=" + to_string(v);
  }
  return s + "}";
}

/// One (time, participant, action) entry of the environment's history.
struct HistoryRecord {
  int time = 0;
  std::string agent;
  std::string action;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
  friend bool operator<(const HistoryRecord& a, const HistoryRecord& b) {
    return std::tie(a.time, a.agent, a.action) < std::tie(b.time, b.agent, b.action);
  }
};

struct EnvState {
  VarMap vars;
  std::vector<HistoryRecord> history;
  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct GlobalState {
  EnvState env;
  std::map<std::string, LocalState> locals;
  friend bool operator==(const GlobalState&, const GlobalState&) = default;
};

/// A tree node. The root carries no state (depth -1); its children are the
/// initial global states at depth 0.
struct Node {
  std::string id;
  int parent = -1;
  Rational prob;  // probability of the edge from parent
  int depth = -1;
  GlobalState state;
  std::vector<int> children;
};

using ActionAlphabet = std::map<std::string, std::set<std::string>>;

/// Finite labelled tree T = (V, E, pi). Built once, then treated as
/// immutable by every analysis.
class PpsTree {
 public:
  static constexpr int kRoot = 0;

  PpsTree() { nodes_.push_back(Node{"root", -1, Rational(1), -1, {}, {}}); }
  PpsTree(std::vector<std::string> agents, ActionAlphabet actions) : PpsTree() {
    agents_ = std::move(agents);
    actions_ = std::move(actions);
  }

  /// Appends a child of `parent`; returns its index. Depth is derived.
  int add_node(int parent, std::string id, Rational prob, GlobalState state) {
    if (parent < 0 || parent >= static_cast<int>(nodes_.size())) throw Error("add_node: parent index out of range");
    int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{std::move(id), parent, std::move(prob), nodes_[parent].depth + 1, std::move(state), {}});
    nodes_[parent].children.push_back(idx);
    return idx;
  }

  const std::vector<std::string>& agents() const { return agents_; }
  const ActionAlphabet& actions() const { return actions_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_.at(i); }
  std::size_t size() const { return nodes_.size(); }

  bool has_agent(const std::string& a) const {
    return std::find(agents_.begin(), agents_.end(), a) != agents_.end();
  }
  /// True if `action` belongs to Act_agent (skip always does).
  bool has_action(const std::string& agent, const std::string& action) const {
    if (action == kSkip) return true;
    auto it = actions_.find(agent);
    return it != actions_.end() && it->second.count(action) > 0;
  }

  /// Depth of the leaves; the tree's horizon.
  int horizon() const {
    int h = 0;
    for (const auto& n : nodes_)
      if (n.children.empty() && n.parent >= 0) h = std::max(h, n.depth);
    return h;
  }

  friend bool operator==(const PpsTree& a, const PpsTree& b) {
    if (a.agents_ != b.agents_ || a.actions_ != b.actions_ || a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
      const Node& x = a.nodes_[i];
      const Node& y = b.nodes_[i];
      if (x.id != y.id || x.parent != y.parent || x.prob != y.prob || x.depth != y.depth || !(x.state == y.state) ||
          x.children != y.children)
        return false;
    }
    return true;
  }

 private:
  std::vector<std::string> agents_;
  ActionAlphabet actions_;
  std::vector<Node> nodes_;
};

/// List of violated well-formedness conditions; empty iff the tree is valid.
struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string str() const {
    std::string s;
    for (const auto& v : violations) s += v + "\n";
    return s;
  }
};

inline ValidationReport validate_tree(const PpsTree& tree) {
  ValidationReport rep;
  auto add = [&](std::string msg) { rep.violations.push_back(std::move(msg)); };
  const auto& nodes = tree.nodes();

  if (nodes.empty() || nodes[0].parent != -1) {
    add("missing root");
    return rep;
  }
  if (nodes[0].children.empty()) add("root has no children (no initial states)");

  std::set<std::string> agent_set(tree.agents().begin(), tree.agents().end());
  if (agent_set.size() != tree.agents().size()) add("duplicate agent identifiers");
  if (agent_set.count(kEnv)) add("agent identifier \"env\" is reserved for the environment");

  // Act_i pairwise disjoint (skip is agent-qualified and exempt).
  std::map<std::string, std::string> owner;
  for (const auto& [agent, acts] : tree.actions()) {
    if (agent != kEnv && !agent_set.count(agent)) add("action alphabet for undeclared agent " + agent);
    for (const auto& a : acts) {
      if (a == kSkip) continue;
      auto [it, fresh] = owner.emplace(a, agent);
      if (!fresh) add("action " + a + " shared by " + it->second + " and " + agent);
    }
  }

  std::unordered_set<std::string> ids;
  int leaf_depth = -2;
  for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
    const Node& n = nodes[idx];
    if (!ids.insert(n.id).second) add("duplicate node id " + n.id);
    std::string where = "node " + n.id;

    if (idx > 0) {
      if (n.parent < 0 || n.parent >= static_cast<int>(idx)) {
        add(where + ": parent must precede child (not a tree)");
        continue;
      }
      const Node& p = nodes[n.parent];
      if (std::find(p.children.begin(), p.children.end(), static_cast<int>(idx)) == p.children.end())
        add(where + ": missing from parent's child list");
      if (n.depth != p.depth + 1) add(where + ": depth inconsistent with parent");
      if (n.prob <= Rational(0) || n.prob > Rational(1))
        add(where + ": edge probability " + n.prob.str() + " outside (0,1]");

      // synchrony: every agent present, time == depth
      if (n.state.locals.size() != agent_set.size()) add(where + ": local states do not match declared agents");
      for (const auto& [agent, ls] : n.state.locals) {
        if (!agent_set.count(agent)) add(where + ": local state for undeclared agent " + agent);
        if (ls.agent != agent) add(where + ": local state keyed " + agent + " names agent " + ls.agent);
        if (ls.time != n.depth)
          add(where + ": agent " + agent + " time " + std::to_string(ls.time) + " != depth " + std::to_string(n.depth));
      }

      // history: parent's history followed by this round's records
      const auto& h = n.state.env.history;
      const auto& ph = idx > 0 && n.parent > 0 ? p.state.env.history : std::vector<HistoryRecord>{};
      if (h.size() < ph.size() || !std::equal(ph.begin(), ph.end(), h.begin())) {
        add(where + ": history does not extend parent's history");
      } else {
        std::set<std::string> seen;
        for (std::size_t k = ph.size(); k < h.size(); ++k) {
          const auto& rec = h[k];
          if (rec.time != p.depth) add(where + ": history record at time " + std::to_string(rec.time) + " in round " + std::to_string(p.depth));
          if (!seen.insert(rec.agent).second) add(where + ": two records for " + rec.agent + " in one round");
          if (rec.agent != kEnv && !agent_set.count(rec.agent)) add(where + ": history names unknown participant " + rec.agent);
          else if (!tree.has_action(rec.agent, rec.action))
            add(where + ": action " + rec.action + " not in alphabet of " + rec.agent);
        }
        if (!std::is_sorted(h.begin(), h.end())) add(where + ": history not ordered by (time, agent)");
      }
    }

    if (!n.children.empty()) {
      Rational sum(0);
      for (int c : n.children) {
        if (c <= static_cast<int>(idx) || c >= static_cast<int>(nodes.size()) || nodes[c].parent != static_cast<int>(idx)) {
          add(where + ": child link inconsistent");
          continue;
        }
        sum += nodes[c].prob;
      }
      if (sum != Rational(1)) add(where + ": outgoing sum " + sum.str() + " != 1");
    } else if (idx > 0) {
      if (leaf_depth == -2) leaf_depth = n.depth;
      else if (leaf_depth != n.depth) add(where + ": leaf at depth " + std::to_string(n.depth) + ", expected uniform depth " + std::to_string(leaf_depth));
    }
  }
  return rep;
}

}  // namespace pak
