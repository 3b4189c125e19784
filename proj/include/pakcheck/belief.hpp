#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pakcheck/fact.hpp"

namespace pak {

/// An agent together with one of its actions, written "agent.action".
struct ActionRef {
  std::string agent;
  std::string action;

  static ActionRef parse(std::string_view text) {
    auto dot = text.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size())
      throw Error("expected AGENT.ACTION, got \"" + std::string(text) + "\"");
    return {std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
  }
  std::string str() const { return agent + "." + action; }
  friend bool operator==(const ActionRef&, const ActionRef&) = default;
};

/// Belief of `agent` in a fact at its local state `s`:
/// mu(fact@l | R(l)).
inline Rational local_belief(const System& sys, const PointTable& fact, std::size_t agent, StateId s) {
  return Rational(sys.weight(at_state(fact, sys, agent, s)), sys.weight(sys.runs_with(agent, s)));
}

/// Bel_agent(fact) at the point (run, t).
inline Rational belief_at(const System& sys, const std::string& agent, const Fact& fact, std::size_t run, int t) {
  if (run >= sys.run_count() || t < 0 || t > sys.horizon()) throw Error("not a point of T");
  std::size_t a = sys.agent_index(agent);
  return local_belief(sys, evaluate(sys, fact), a, sys.local_at(a, run, t));
}

inline Rational belief_at(const System& sys, const std::string& agent, const Fact& fact, const Run& run, int t) {
  return belief_at(sys, agent, fact, sys.find_run(run), t);
}

/// Beliefs of the acting agent in a fact at every run and every firing local
/// state.
struct BeliefProfile {
  ActionRef action;
  Fact fact;
  std::vector<Rational> per_run;  // 0 for runs outside R(alpha)
  struct Entry {
    StateId state;
    LocalState local;
    Rational belief;
  };
  std::vector<Entry> per_state;  // one per element of L_i[alpha]
};

/// Everything derived from one (tree, fact, proper action) triple: the fact's
/// point table, R(alpha), the firing states L_i[alpha] and, per firing state,
/// the weights of R(l), fact@l, alpha@l and [fact and alpha]@l.
class ActionAnalysis {
 public:
  struct StateWeights {
    StateId state;
    int time;
    mpz_class occurs;      // R(l)
    mpz_class fact;        // fact@l
    mpz_class acts;        // alpha@l
    mpz_class fact_acts;   // [fact and alpha]@l
    RunSet acting_runs;    // alpha@l
  };

  ActionAnalysis(const System& sys, const Fact& fact, ActionRef action)
      : ActionAnalysis(sys, fact, evaluate(sys, fact), std::move(action)) {}

  ActionAnalysis(const System& sys, Fact fact, PointTable table, ActionRef action)
      : sys_(&sys), fact_(std::move(fact)), table_(std::move(table)), action_(std::move(action)) {
    occ_ = occurrences(sys, action_.agent, action_.action);
    if (!occ_.proper()) throw Error("action must be proper: " + action_.str());
    agent_ = sys.agent_index(action_.agent);
    acting_ = sys.weight(occ_.runs);
    fact_at_action_ = at_action(table_, occ_, sys);

    const int width = sys.horizon() + 1;
    std::vector<int> slot(sys.local_states(agent_).size(), -1);
    state_of_run_.assign(sys.run_count(), -1);
    for (int t = 0; t < width; ++t) {
      occ_.points[static_cast<std::size_t>(t)].for_each([&](std::size_t r) {
        StateId s = sys.local_at(agent_, r, t);
        if (slot[static_cast<std::size_t>(s)] < 0) {
          slot[static_cast<std::size_t>(s)] = static_cast<int>(firing_.size());
          firing_.push_back(StateWeights{s, t, 0, 0, 0, 0, sys.none()});
        }
        firing_[static_cast<std::size_t>(slot[static_cast<std::size_t>(s)])].acting_runs.set(r);
        state_of_run_[r] = slot[static_cast<std::size_t>(s)];
      });
    }
    for (auto& w : firing_) {
      const RunSet& occurs = sys.runs_with(agent_, w.state);
      RunSet f = occurs & table_[static_cast<std::size_t>(w.time)];
      w.occurs = sys.weight(occurs);
      w.fact = sys.weight(f);
      w.acts = sys.weight(w.acting_runs);
      w.fact_acts = sys.weight(f & w.acting_runs);
    }
  }

  const System& system() const { return *sys_; }
  const Fact& fact() const { return fact_; }
  const PointTable& table() const { return table_; }
  const ActionRef& action() const { return action_; }
  std::size_t agent() const { return agent_; }
  const ActionOccurrences& action_occurrences() const { return occ_; }
  const RunSet& acting_runs() const { return occ_.runs; }
  const RunSet& fact_at_action() const { return fact_at_action_; }
  /// L_i[alpha] with per-state weights, in order of first occurrence.
  const std::vector<StateWeights>& firing_states() const { return firing_; }

  Rational belief(const StateWeights& w) const { return Rational(w.fact, w.occurs); }

  /// (Bel_i(fact)@alpha)[r]; zero when alpha is not performed in r.
  Rational run_belief(std::size_t r) const {
    int k = state_of_run_.at(r);
    return k < 0 ? Rational(0) : belief(firing_[static_cast<std::size_t>(k)]);
  }
  /// Index into firing_states() of the state at which r performs alpha.
  int firing_slot(std::size_t r) const { return state_of_run_.at(r); }

  /// mu(fact@alpha | R(alpha)).
  Rational success_probability() const { return Rational(sys_->weight(fact_at_action_), acting_); }

  /// Expected firing belief, summed run by run.
  Rational expected_belief() const {
    Rational sum(0);
    occ_.runs.for_each([&](std::size_t r) { sum += Rational(sys_->weight(r), acting_) * run_belief(r); });
    return sum;
  }

  /// Expected firing belief regrouped by firing state:
  /// sum over l of mu(alpha@l | R(alpha)) * Bel(l).
  Rational expected_belief_grouped() const {
    Rational sum(0);
    for (const auto& w : firing_) sum += Rational(w.acts, acting_) * belief(w);
    return sum;
  }

  /// mu({r in R(alpha) : (Bel@alpha)[r] >= p} | R(alpha)).
  Rational threshold_measure(const Rational& p) const {
    mpz_class meet = 0;
    for (const auto& w : firing_)
      if (belief(w) >= p) meet += w.acts;
    return Rational(meet, acting_);
  }

  /// Measure of acting runs whose belief is exactly 1.
  Rational certainty_measure() const { return threshold_measure(Rational(1)); }

  BeliefProfile profile() const {
    BeliefProfile p{action_, fact_, {}, {}};
    p.per_run.reserve(sys_->run_count());
    for (std::size_t r = 0; r < sys_->run_count(); ++r) p.per_run.push_back(run_belief(r));
    for (const auto& w : firing_)
      p.per_state.push_back({w.state, sys_->local_states(agent_)[static_cast<std::size_t>(w.state)], belief(w)});
    return p;
  }

 private:
  const System* sys_;
  Fact fact_;
  PointTable table_;
  ActionRef action_;
  ActionOccurrences occ_;
  std::size_t agent_ = 0;
  mpz_class acting_;
  RunSet fact_at_action_;
  std::vector<StateWeights> firing_;
  std::vector<int> state_of_run_;
};

inline BeliefProfile belief_profile(const System& sys, const Fact& fact, const ActionRef& action) {
  return ActionAnalysis(sys, fact, action).profile();
}

inline Rational success_probability(const System& sys, const Fact& fact, const ActionRef& action) {
  return ActionAnalysis(sys, fact, action).success_probability();
}

inline Rational expected_belief(const System& sys, const Fact& fact, const ActionRef& action) {
  return ActionAnalysis(sys, fact, action).expected_belief();
}

inline Rational threshold_measure(const System& sys, const Fact& fact, const ActionRef& action, const Rational& p) {
  return ActionAnalysis(sys, fact, action).threshold_measure(p);
}

}  // namespace pak
