#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "pakcheck/model.hpp"

namespace pak {

/// Dense set of run indices.
class RunSet {
 public:
  RunSet() = default;
  explicit RunSet(std::size_t n, bool full = false) : n_(n), words_((n + 63) / 64, full ? ~0ULL : 0ULL) { trim(); }

  std::size_t universe() const { return n_; }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1ULL; }
  void set(std::size_t i, bool v = true) {
    if (v) words_[i / 64] |= 1ULL << (i % 64);
    else words_[i / 64] &= ~(1ULL << (i % 64));
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool empty() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }
  bool subset_of(const RunSet& o) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~o.words_[k]) return false;
    return true;
  }
  bool intersects(const RunSet& o) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & o.words_[k]) return true;
    return false;
  }

  /// Calls f(index) for each member in increasing order.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      auto w = words_[k];
      while (w) {
        int b = std::countr_zero(w);
        f(k * 64 + static_cast<std::size_t>(b));
        w &= w - 1;
      }
    }
  }
  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

  RunSet& operator&=(const RunSet& o) { for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k]; return *this; }
  RunSet& operator|=(const RunSet& o) { for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k]; return *this; }
  RunSet& operator-=(const RunSet& o) { for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= ~o.words_[k]; return *this; }
  friend RunSet operator&(RunSet a, const RunSet& b) { return a &= b; }
  friend RunSet operator|(RunSet a, const RunSet& b) { return a |= b; }
  friend RunSet operator-(RunSet a, const RunSet& b) { return a -= b; }
  RunSet operator~() const {
    RunSet r = *this;
    for (auto& w : r.words_) w = ~w;
    r.trim();
    return r;
  }
  friend bool operator==(const RunSet&, const RunSet&) = default;

 private:
  void trim() {
    if (n_ % 64 && !words_.empty()) words_.back() &= (1ULL << (n_ % 64)) - 1;
  }
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

/// A run: node indices from a child of the root to a leaf, one per time step.
struct Run {
  std::vector<int> path;
  friend bool operator==(const Run&, const Run&) = default;
};

/// Index of an interned local state of one agent.
using StateId = int;

/// A validated tree together with its probability space over runs and the
/// indistinguishability structure of each agent. Immutable once built.
///
/// Run measures are stored as integer weights over a common denominator, so
/// mu(Q) = weight(Q) / denominator() exactly.
class System {
 public:
  explicit System(PpsTree tree) : tree_(std::move(tree)) {
    auto report = validate_tree(tree_);
    if (!report.ok()) throw Error("invalid pps tree:\n" + report.str());
    horizon_ = tree_.horizon();
    enumerate();
    index_local_states();
  }

  const PpsTree& tree() const { return tree_; }
  int horizon() const { return horizon_; }
  std::size_t run_count() const { return runs_.size(); }
  const std::vector<Run>& runs() const { return runs_; }
  const Run& run(std::size_t r) const { return runs_.at(r); }
  int node_at(std::size_t r, int t) const { return runs_[r].path[static_cast<std::size_t>(t)]; }
  const GlobalState& state_at(std::size_t r, int t) const { return tree_.node(node_at(r, t)).state; }

  RunSet none() const { return RunSet(runs_.size()); }
  RunSet all() const { return RunSet(runs_.size(), true); }

  const mpz_class& weight(std::size_t r) const { return weights_[r]; }
  const mpz_class& denominator() const { return denominator_; }
  mpz_class weight(const RunSet& q) const {
    mpz_class w = 0;
    q.for_each([&](std::size_t r) { w += weights_[r]; });
    return w;
  }

  Rational run_measure(std::size_t r) const { return Rational(weights_.at(r), denominator_); }
  Rational measure(const RunSet& q) const {
    check_universe(q);
    return Rational(weight(q), denominator_);
  }
  Rational conditional_measure(const RunSet& event, const RunSet& given) const {
    check_universe(event);
    check_universe(given);
    mpz_class g = weight(given);
    if (g == 0) throw Error("conditioning on null event");
    return Rational(weight(event & given), g);
  }

  /// Index of a run given by its node path; throws "run not in tree" if the
  /// path is not one of the tree's runs.
  std::size_t find_run(const Run& run) const {
    if (run.path.empty()) throw Error("run not in tree");
    auto it = leaf_to_run_.find(run.path.back());
    if (it == leaf_to_run_.end() || !(runs_[it->second] == run)) throw Error("run not in tree");
    return it->second;
  }
  RunSet to_set(const std::vector<Run>& runs) const {
    RunSet q = none();
    for (const auto& r : runs) q.set(find_run(r));
    return q;
  }

  // Local-state structure --------------------------------------------------

  std::size_t agent_index(const std::string& agent) const {
    const auto& ags = tree_.agents();
    auto it = std::find(ags.begin(), ags.end(), agent);
    if (it == ags.end()) throw Error("unknown agent " + agent);
    return static_cast<std::size_t>(it - ags.begin());
  }
  /// Interned local states of an agent, in first-occurrence order.
  const std::vector<LocalState>& local_states(std::size_t agent) const { return agents_[agent].states; }
  StateId local_at(std::size_t agent, std::size_t r, int t) const {
    return agents_[agent].at[r * static_cast<std::size_t>(horizon_ + 1) + static_cast<std::size_t>(t)];
  }
  /// R(l): runs in which the local state occurs.
  const RunSet& runs_with(std::size_t agent, StateId s) const { return agents_[agent].occurs[static_cast<std::size_t>(s)]; }
  std::optional<StateId> find_local_state(const LocalState& l) const {
    std::size_t a = agent_index(l.agent);
    auto it = agents_[a].ids.find(l);
    if (it == agents_[a].ids.end()) return std::nullopt;
    return it->second;
  }

  /// Human-readable label of a run: the node ids along its path.
  std::string run_label(std::size_t r) const {
    std::string s;
    for (int v : runs_[r].path) {
      if (!s.empty()) s += ">";
      s += tree_.node(v).id;
    }
    return s;
  }

 private:
  struct AgentIndex {
    std::vector<LocalState> states;
    std::map<LocalState, StateId> ids;
    std::vector<StateId> at;       // [run * (H+1) + t]
    std::vector<RunSet> occurs;    // per state
  };

  void check_universe(const RunSet& q) const {
    if (q.universe() != runs_.size()) throw Error("run not in tree");
  }

  void enumerate() {
    // depth-first so runs come out in child order
    std::vector<std::pair<int, Rational>> leaves;
    std::vector<int> path;
    auto dfs = [&](auto&& self, int v, const Rational& m) -> void {
      const Node& n = tree_.node(v);
      if (n.children.empty()) {
        runs_.push_back(Run{path});
        leaves.emplace_back(v, m);
        return;
      }
      for (int c : n.children) {
        path.push_back(c);
        self(self, c, m * tree_.node(c).prob);
        path.pop_back();
      }
    };
    dfs(dfs, PpsTree::kRoot, Rational(1));

    denominator_ = 1;
    for (const auto& [leaf, m] : leaves) mpz_lcm(denominator_.get_mpz_t(), denominator_.get_mpz_t(), m.denominator().get_mpz_t());
    for (std::size_t r = 0; r < leaves.size(); ++r) {
      const Rational& m = leaves[r].second;
      weights_.push_back(m.numerator() * (denominator_ / m.denominator()));
      leaf_to_run_[leaves[r].first] = r;
    }
  }

  void index_local_states() {
    const std::size_t width = static_cast<std::size_t>(horizon_ + 1);
    agents_.resize(tree_.agents().size());
    for (std::size_t a = 0; a < agents_.size(); ++a) {
      auto& ai = agents_[a];
      ai.at.assign(runs_.size() * width, -1);
      const std::string& name = tree_.agents()[a];
      for (std::size_t r = 0; r < runs_.size(); ++r) {
        for (int t = 0; t <= horizon_; ++t) {
          const LocalState& l = state_at(r, t).locals.at(name);
          auto [it, fresh] = ai.ids.emplace(l, static_cast<StateId>(ai.states.size()));
          if (fresh) {
            ai.states.push_back(l);
            ai.occurs.emplace_back(runs_.size());
          }
          ai.at[r * width + static_cast<std::size_t>(t)] = it->second;
          ai.occurs[static_cast<std::size_t>(it->second)].set(r);
        }
      }
    }
  }

  PpsTree tree_;
  int horizon_ = 0;
  std::vector<Run> runs_;
  std::vector<mpz_class> weights_;
  mpz_class denominator_ = 1;
  std::map<int, std::size_t> leaf_to_run_;
  std::vector<AgentIndex> agents_;
};

/// Every run paired with its exact measure.
inline std::vector<std::pair<Run, Rational>> enumerate_runs(const System& sys) {
  std::vector<std::pair<Run, Rational>> out;
  for (std::size_t r = 0; r < sys.run_count(); ++r) out.emplace_back(sys.run(r), sys.run_measure(r));
  return out;
}

inline Rational measure(const System& sys, const std::vector<Run>& runs) { return sys.measure(sys.to_set(runs)); }

inline Rational conditional_measure(const System& sys, const std::vector<Run>& event, const std::vector<Run>& given) {
  return sys.conditional_measure(sys.to_set(event), sys.to_set(given));
}

}  // namespace pak
