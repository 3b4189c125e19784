#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pakcheck/analysis.hpp"
#include "pakcheck/random.hpp"

namespace pak {

struct SuiteParams {
  std::uint64_t first_seed = 1;
  int cases = 200;
  int max_depth = 4;
  int max_branching = 3;
  int facts_per_tree = 12;
};

/// Tally for one property: how many instances were checked, how many had
/// their hypotheses met, and the violations found.
struct PropertyTally {
  long checked = 0;
  long applicable = 0;
  long violations = 0;
  std::vector<std::string> examples;  // first few violations

  void fail(std::string what) {
    ++violations;
    if (examples.size() < 5) examples.push_back(std::move(what));
  }
};

struct SuiteResult {
  int trees = 0;
  long pairs = 0;
  std::map<std::string, PropertyTally> properties;
  bool ok() const {
    for (const auto& [name, t] : properties)
      if (t.violations) return false;
    return true;
  }
};

/// Parameters used for the k-th tree of the suite; agent count and alphabet
/// size cycle with the seed.
inline RandomPpsParams suite_tree_params(const SuiteParams& sp, std::uint64_t seed) {
  RandomPpsParams p;
  p.seed = seed;
  p.max_depth = sp.max_depth;
  p.max_branching = sp.max_branching;
  p.num_agents = 1 + static_cast<int>(seed % 3);
  p.actions_per_agent = 1 + static_cast<int>((seed / 3) % 3);
  return p;
}

/// Facts used for one suite tree: a few fixed past-based facts followed by
/// random ones.
inline std::vector<Fact> suite_facts(const PpsTree& tree, std::uint64_t seed, int count) {
  std::vector<Fact> facts;
  const std::string& a0 = tree.agents().front();
  const std::string& alast = tree.agents().back();
  facts.push_back(Fact::var_eq(a0, "x", std::int64_t{1}));
  facts.push_back(Fact::both(Fact::envvar_eq("init", std::int64_t{0}), Fact::var_eq(alast, "o", std::int64_t{1})));
  facts.push_back(Fact::either(Fact::envvar_eq("e", std::int64_t{1}), Fact::var_eq(a0, "o", std::int64_t{0})));
  std::mt19937_64 gen(seed * 7919 + 17);
  while (static_cast<int>(facts.size()) < count) facts.push_back(random_fact(tree, gen));
  return facts;
}

namespace detail {

inline std::string case_label(std::uint64_t seed, const Fact& f, const ActionRef& a) {
  return "seed " + std::to_string(seed) + ", " + render(f) + " vs " + a.str();
}

inline void check_pair(SuiteResult& res, std::uint64_t seed, const ActionAnalysis& an, bool deterministic, bool past) {
  auto& P = res.properties;
  const std::string label = case_label(seed, an.fact(), an.action());
  const bool indep = is_independent(an);

  // A deterministic action or a past-based fact gives independence.
  if (deterministic) {
    auto& t = P["independence_deterministic"];
    ++t.checked;
    ++t.applicable;
    if (!indep) t.fail(label);
  }
  if (past) {
    auto& t = P["independence_past_based"];
    ++t.checked;
    ++t.applicable;
    if (!indep) t.fail(label);
  }

  // Expectation identity: exact on past-based facts and on any independent pair.
  AnalysisReport ex = verify_expectation(an);
  if (past) {
    auto& t = P["expectation_past_based"];
    ++t.checked;
    ++t.applicable;
    if (ex.verdict != Verdict::Holds) t.fail(label);
  }
  {
    auto& t = P["expectation_independent"];
    ++t.checked;
    if (indep) {
      ++t.applicable;
      if (ex.verdict != Verdict::Holds) t.fail(label);
    } else if (ex.verdict != Verdict::NotApplicable) {
      t.fail(label + " (dependent pair not flagged)");
    }
  }
  {
    auto& t = P["expectation_grouped"];
    ++t.checked;
    ++t.applicable;
    if (an.expected_belief() != an.expected_belief_grouped()) t.fail(label);
  }

  // mu(phi@alpha | alpha@l) = Bel(l) at every firing state of an independent pair.
  if (indep) {
    auto& t = P["belief_at_firing_state"];
    const System& sys = an.system();
    for (const auto& w : an.firing_states()) {
      ++t.checked;
      ++t.applicable;
      Rational lhs(sys.weight(an.fact_at_action() & w.acting_runs), w.acts);
      if (lhs != an.belief(w)) t.fail(label + " at state " + std::to_string(w.state));
    }
  }

  std::vector<Rational> grid{Rational(0), Rational(1, 10), Rational(1, 4), Rational(1, 2), Rational(9, 10), Rational(1)};
  Rational lo = an.belief(*extreme_state(an, false));
  Rational success = an.success_probability();
  std::vector<Rational> thresholds = grid;
  thresholds.push_back(lo);
  thresholds.push_back(success);

  for (const auto& p : thresholds) {
    auto& suff = P["sufficiency"];
    ++suff.checked;
    AnalysisReport r = verify_sufficiency(an, p);
    if (r.verdict == Verdict::Holds) ++suff.applicable;
    if (r.verdict == Verdict::Fails) suff.fail(label + " p=" + p.str());
    if (indep && lo >= p && r.verdict != Verdict::Holds) suff.fail(label + " p=" + p.str() + " (premise met, not held)");

    auto& some = P["sometimes"];
    ++some.checked;
    AnalysisReport s = verify_sometimes(an, p);
    if (s.verdict == Verdict::Holds) {
      ++some.applicable;
      if (s.witnesses.empty() || !s.witnesses.front().belief || *s.witnesses.front().belief < p)
        some.fail(label + " p=" + p.str() + " (no witness)");
    }
    if (s.verdict == Verdict::Fails) some.fail(label + " p=" + p.str());
  }

  std::vector<Rational> pak_grid{Rational(1, 10), Rational(1, 4), Rational(1, 2), Rational(9, 10)};
  for (const auto& d : pak_grid)
    for (const auto& e : pak_grid) {
      auto& t = P["pak"];
      ++t.checked;
      AnalysisReport r = verify_pak(an, d, e);
      if (r.verdict == Verdict::Holds) ++t.applicable;
      if (r.verdict == Verdict::Fails) t.fail(label + " delta=" + d.str() + " eps=" + e.str());
    }
  if (success == Rational(1)) {
    auto& t = P["certainty"];
    ++t.checked;
    AnalysisReport r = verify_pak(an, Rational(0), Rational(0));
    if (r.verdict == Verdict::Holds) ++t.applicable;
    if (r.verdict == Verdict::Fails) t.fail(label);
  }
}

}  // namespace detail

/// Checks one tree: validity, measure normalization, and every property on
/// every (fact, proper action) pair.
inline void run_suite_case(SuiteResult& res, const SuiteParams& sp, std::uint64_t seed) {
  PpsTree tree = random_pps(suite_tree_params(sp, seed));
  ++res.trees;
  auto& valid = res.properties["tree_valid"];
  ++valid.checked;
  ++valid.applicable;
  ValidationReport vr = validate_tree(tree);
  if (!vr.ok()) {
    valid.fail("seed " + std::to_string(seed) + ": " + vr.str());
    return;
  }
  System sys(std::move(tree));
  auto& norm = res.properties["measure_sums_to_one"];
  ++norm.checked;
  ++norm.applicable;
  if (sys.measure(sys.all()) != Rational(1)) norm.fail("seed " + std::to_string(seed));

  std::vector<ActionRef> proper;
  std::vector<bool> deterministic;
  for (const auto& agent : sys.tree().agents())
    for (const auto& act : sys.tree().actions().at(agent)) {
      ActionRef a{agent, act};
      if (!is_proper(sys, a)) continue;
      proper.push_back(a);
      deterministic.push_back(is_deterministic_action(sys, a));
    }

  for (const Fact& f : suite_facts(sys.tree(), seed, sp.facts_per_tree)) {
    PointTable table = evaluate(sys, f);
    bool past = is_past_based(sys, table);
    for (std::size_t k = 0; k < proper.size(); ++k) {
      ActionAnalysis an(sys, f, table, proper[k]);
      ++res.pairs;
      detail::check_pair(res, seed, an, deterministic[k], past);
    }
  }
}

inline SuiteResult run_suite(const SuiteParams& sp) {
  SuiteResult res;
  for (int k = 0; k < sp.cases; ++k) run_suite_case(res, sp, sp.first_seed + static_cast<std::uint64_t>(k));
  return res;
}

}  // namespace pak
