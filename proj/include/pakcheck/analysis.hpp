#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pakcheck/belief.hpp"

namespace pak {

enum class Verdict { Holds, Fails, NotApplicable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::NotApplicable: return "not-applicable";
  }
  return "?";
}

/// Evidence attached to a report: a run, a point, or a local state together
/// with the tree nodes where it occurs.
struct Witness {
  std::string kind;  // "run" | "point" | "local_state"
  std::optional<std::size_t> run;
  std::string run_label;
  std::optional<int> time;
  std::optional<LocalState> local;
  std::vector<std::string> nodes;
  std::optional<Rational> belief;
  std::string note;
};

struct AnalysisReport {
  std::string kind;
  Verdict verdict = Verdict::Holds;
  std::vector<std::pair<std::string, Rational>> values;
  std::vector<Witness> witnesses;
  std::vector<std::string> notes;

  const Rational& value(const std::string& name) const {
    for (const auto& [k, v] : values)
      if (k == name) return v;
    throw Error("report has no value named " + name);
  }
  bool has_value(const std::string& name) const {
    for (const auto& [k, v] : values)
      if (k == name) return true;
    return false;
  }
  void set(std::string name, Rational v) { values.emplace_back(std::move(name), std::move(v)); }
};

namespace detail {

inline Witness run_witness(const System& sys, std::size_t r, std::string note = {}) {
  Witness w;
  w.kind = "run";
  w.run = r;
  w.run_label = sys.run_label(r);
  w.note = std::move(note);
  return w;
}

inline Witness state_witness(const System& sys, std::size_t agent, StateId s, std::string note = {}) {
  Witness w;
  w.kind = "local_state";
  const LocalState& l = sys.local_states(agent)[static_cast<std::size_t>(s)];
  w.local = l;
  w.time = l.time;
  std::set<int> nodes;
  sys.runs_with(agent, s).for_each([&](std::size_t r) { nodes.insert(sys.node_at(r, l.time)); });
  for (int v : nodes) w.nodes.push_back(sys.tree().node(v).id);
  w.note = std::move(note);
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Structural predicates

struct Properness {
  bool proper = false;
  std::optional<Witness> witness;
  explicit operator bool() const { return proper; }
};

/// alpha is proper for i: performed at least once in T and at most once per run.
inline Properness is_proper(const System& sys, const ActionRef& a) {
  ActionOccurrences occ = occurrences(sys, a.agent, a.action);
  Properness out;
  if (occ.repeat_run) {
    out.witness = detail::run_witness(sys, *occ.repeat_run, a.str() + " performed more than once");
  } else if (occ.runs.empty()) {
    Witness w;
    w.kind = "run";
    w.note = a.str() + " is never performed";
    out.witness = w;
  } else {
    out.proper = true;
  }
  return out;
}

/// alpha_i is a function of i's local state: at every local state, i performs
/// alpha either at all points with that state or at none.
inline bool is_deterministic_action(const System& sys, const ActionRef& a) {
  ActionOccurrences occ = occurrences(sys, a.agent, a.action);
  std::size_t agent = sys.agent_index(a.agent);
  const auto& states = sys.local_states(agent);
  for (std::size_t s = 0; s < states.size(); ++s) {
    const RunSet& with = sys.runs_with(agent, static_cast<StateId>(s));
    const RunSet& acting = occ.points[static_cast<std::size_t>(states[s].time)];
    RunSet hit = with & acting;
    if (!hit.empty() && !(hit == with)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Independence and constraints

/// Checks mu(phi@l | R(l)) * mu(alpha@l | R(l)) = mu([phi and alpha]@l | R(l))
/// at every local state l of the acting agent that occurs in T.
inline AnalysisReport check_local_state_independence(const ActionAnalysis& an) {
  AnalysisReport rep;
  rep.kind = "independence";
  const System& sys = an.system();
  // States outside L_i[alpha] satisfy the identity as 0 = 0.
  for (const auto& w : an.firing_states()) {
    if (w.fact * w.acts == w.fact_acts * w.occurs) continue;
    Rational lhs = Rational(w.fact, w.occurs) * Rational(w.acts, w.occurs);
    Rational rhs = Rational(w.fact_acts, w.occurs);
    if (rep.verdict == Verdict::Holds) {
      rep.verdict = Verdict::Fails;
      rep.set("lhs", lhs);
      rep.set("rhs", rhs);
      rep.set("belief", Rational(w.fact, w.occurs));
      rep.set("action_probability", Rational(w.acts, w.occurs));
    }
    Witness wit = detail::state_witness(sys, an.agent(), w.state,
                                        "product " + lhs.str() + " != joint " + rhs.str());
    rep.witnesses.push_back(std::move(wit));
  }
  return rep;
}

inline AnalysisReport check_local_state_independence(const System& sys, const Fact& fact, const ActionRef& a) {
  return check_local_state_independence(ActionAnalysis(sys, fact, a));
}

inline bool is_independent(const ActionAnalysis& an) {
  for (const auto& w : an.firing_states())
    if (w.fact * w.acts != w.fact_acts * w.occurs) return false;
  return true;
}

/// mu(phi@alpha | R(alpha)) >= p.
inline AnalysisReport check_constraint(const ActionAnalysis& an, const Rational& p) {
  AnalysisReport rep;
  rep.kind = "constraint-check";
  Rational value = an.success_probability();
  rep.set("success_probability", value);
  rep.set("threshold", p);
  if (value >= p) return rep;
  rep.verdict = Verdict::Fails;
  RunSet bad = an.acting_runs() - an.fact_at_action();
  std::size_t shown = 0;
  bad.for_each([&](std::size_t r) {
    if (shown++ < 8) rep.witnesses.push_back(detail::run_witness(an.system(), r, "condition false when action performed"));
  });
  return rep;
}

inline AnalysisReport check_constraint(const System& sys, const Fact& fact, const ActionRef& a, const Rational& p) {
  return check_constraint(ActionAnalysis(sys, fact, a), p);
}

// ---------------------------------------------------------------------------
// Theorem verifiers

namespace detail {

/// Marks the report not-applicable because independence fails, attaching the
/// violating states.
inline void not_independent(AnalysisReport& rep, const ActionAnalysis& an) {
  rep.verdict = Verdict::NotApplicable;
  rep.notes.push_back("fact is not local-state independent of " + an.action().str() +
                      " (mixed-step dependence); the theorem's hypothesis fails");
  AnalysisReport ind = check_local_state_independence(an);
  for (auto& w : ind.witnesses) rep.witnesses.push_back(std::move(w));
}

inline const ActionAnalysis::StateWeights* extreme_state(const ActionAnalysis& an, bool want_max) {
  const ActionAnalysis::StateWeights* best = nullptr;
  for (const auto& w : an.firing_states())
    if (!best || (want_max ? an.belief(w) > an.belief(*best) : an.belief(w) < an.belief(*best))) best = &w;
  return best;
}

inline Witness firing_point(const ActionAnalysis& an, const ActionAnalysis::StateWeights& w, std::string note) {
  const System& sys = an.system();
  std::size_t r = w.acting_runs.members().front();
  Witness wit = state_witness(sys, an.agent(), w.state, std::move(note));
  wit.kind = "point";
  wit.run = r;
  wit.run_label = sys.run_label(r);
  wit.belief = an.belief(w);
  return wit;
}

}  // namespace detail

/// If Bel_i(phi) >= p whenever i performs alpha (and phi is local-state
/// independent of alpha) then mu(phi@alpha | R(alpha)) >= p.
inline AnalysisReport verify_sufficiency(const ActionAnalysis& an, const Rational& p) {
  AnalysisReport rep;
  rep.kind = "sufficiency";
  const auto* low = detail::extreme_state(an, false);
  Rational min_belief = an.belief(*low);
  Rational success = an.success_probability();
  rep.set("threshold", p);
  rep.set("min_belief", min_belief);
  rep.set("success_probability", success);
  if (!is_independent(an)) {
    detail::not_independent(rep, an);
    return rep;
  }
  if (min_belief < p) {
    rep.verdict = Verdict::NotApplicable;
    rep.notes.push_back("premise not met: some firing belief is below the threshold");
    rep.witnesses.push_back(detail::firing_point(an, *low, "lowest firing belief"));
    return rep;
  }
  if (success < p) {
    rep.verdict = Verdict::Fails;
    rep.witnesses.push_back(detail::firing_point(an, *low, "lowest firing belief"));
  }
  return rep;
}

/// mu(phi@alpha | R(alpha)) = E(Bel_i(phi)@alpha | R(alpha)) under
/// local-state independence.
inline AnalysisReport verify_expectation(const ActionAnalysis& an) {
  AnalysisReport rep;
  rep.kind = "expectation";
  Rational lhs = an.success_probability();
  Rational rhs = an.expected_belief();
  rep.set("success_probability", lhs);
  rep.set("expected_belief", rhs);
  rep.set("expected_belief_grouped", an.expected_belief_grouped());
  rep.set("gap", lhs - rhs);
  if (!is_independent(an)) {
    detail::not_independent(rep, an);
    return rep;
  }
  if (lhs != rhs) {
    rep.verdict = Verdict::Fails;
    for (const auto& w : an.firing_states())
      rep.witnesses.push_back(detail::firing_point(an, w, "firing state"));
  }
  return rep;
}

/// If mu(phi@alpha | R(alpha)) >= p under independence, some point at which
/// alpha is performed has Bel_i(phi) >= p.
inline AnalysisReport verify_sometimes(const ActionAnalysis& an, const Rational& p) {
  AnalysisReport rep;
  rep.kind = "sometimes";
  Rational success = an.success_probability();
  const auto* high = detail::extreme_state(an, true);
  rep.set("threshold", p);
  rep.set("success_probability", success);
  rep.set("max_belief", an.belief(*high));
  if (!is_independent(an)) {
    detail::not_independent(rep, an);
    return rep;
  }
  if (success < p) {
    rep.verdict = Verdict::NotApplicable;
    rep.notes.push_back("premise not met: success probability below threshold");
    return rep;
  }
  if (an.belief(*high) >= p) {
    rep.witnesses.push_back(detail::firing_point(an, *high, "belief meets threshold"));
  } else {
    rep.verdict = Verdict::Fails;
    rep.witnesses.push_back(detail::firing_point(an, *high, "highest firing belief is below threshold"));
  }
  return rep;
}

/// If mu(phi@alpha | R(alpha)) >= 1 - delta*eps then
/// mu(Bel_i(phi)@alpha >= 1 - eps | R(alpha)) >= 1 - delta. When
/// delta*eps = 0 the premise forces success probability 1 and the stronger
/// mu(Bel_i(phi)@alpha = 1 | R(alpha)) = 1 is checked as well.
inline AnalysisReport verify_pak(const ActionAnalysis& an, const Rational& delta, const Rational& eps) {
  const Rational zero(0), one(1);
  if (delta < zero || delta > one || eps < zero || eps > one) throw Error("δ and ε must lie in [0,1]");
  AnalysisReport rep;
  rep.kind = "pak";
  Rational success = an.success_probability();
  Rational premise = one - delta * eps;
  Rational belief_bound = one - eps;
  Rational measure_bound = one - delta;
  Rational meets = an.threshold_measure(belief_bound);
  rep.set("delta", delta);
  rep.set("eps", eps);
  rep.set("success_probability", success);
  rep.set("premise_threshold", premise);
  rep.set("belief_threshold", belief_bound);
  rep.set("threshold_measure", meets);
  rep.set("required_measure", measure_bound);
  const bool certainty_case = premise == one;
  if (certainty_case) rep.set("certainty_measure", an.certainty_measure());

  if (!is_independent(an)) {
    detail::not_independent(rep, an);
    return rep;
  }
  if (success < premise) {
    rep.verdict = Verdict::NotApplicable;
    rep.notes.push_back("premise not met: success probability below 1 - delta*eps");
    return rep;
  }
  bool ok = meets >= measure_bound;
  if (certainty_case && an.certainty_measure() != one) {
    ok = false;
    rep.notes.push_back("success probability 1 but some firing belief is below 1");
  }
  if (!ok) {
    rep.verdict = Verdict::Fails;
    rep.witnesses.push_back(detail::firing_point(an, *detail::extreme_state(an, false), "lowest firing belief"));
  }
  return rep;
}

inline AnalysisReport verify_sufficiency(const System& sys, const Fact& f, const ActionRef& a, const Rational& p) {
  return verify_sufficiency(ActionAnalysis(sys, f, a), p);
}
inline AnalysisReport verify_expectation(const System& sys, const Fact& f, const ActionRef& a) {
  return verify_expectation(ActionAnalysis(sys, f, a));
}
inline AnalysisReport verify_sometimes(const System& sys, const Fact& f, const ActionRef& a, const Rational& p) {
  return verify_sometimes(ActionAnalysis(sys, f, a), p);
}
inline AnalysisReport verify_pak(const System& sys, const Fact& f, const ActionRef& a, const Rational& delta,
                                 const Rational& eps) {
  return verify_pak(ActionAnalysis(sys, f, a), delta, eps);
}

}  // namespace pak
