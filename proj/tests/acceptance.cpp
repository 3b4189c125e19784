// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. All comparisons are exact.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "oracle.hpp"
#include "pakcheck/pakcheck.hpp"

using namespace pak;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> failures;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 20) failures.push_back(what);
    if (!ok && failures.size() == 20) failures.push_back("...");
  }
  template <class A, class B>
  void expect_eq(const A& got, const B& want, const std::string& what) {
    if (!(got == want)) {
      std::ostringstream os;
      os << what << ": got " << got << ", want " << want;
      expect(false, os.str());
    }
  }
};

std::ostream& operator<<(std::ostream& os, const std::multiset<std::string>& s) {
  os << "{";
  for (const auto& x : s) os << " " << x;
  return os << " }";
}

const ActionRef kFireA{"A", "fireA"};
const ActionRef kAlpha{"i", "alpha"};

Fact both() { return parse_fact("performs(A, fireA) and performs(B, fireB)"); }

void fs_golden(Criterion& c) {
  PpsTree tree = build_tree(builtin_fs());
  System sys(tree);
  ActionAnalysis an(sys, both(), kFireA);
  c.expect_eq(an.success_probability(), Rational(99, 100), "mu(BOTH@fireA | R(fireA))");
  c.expect_eq(oracle::action_stats(tree, both(), "A", "fireA").success, Rational(99, 100), "oracle success");
  AnalysisReport rep = check_constraint(an, Rational(19, 20));
  c.expect(rep.verdict == Verdict::Holds, "constraint at 19/20 holds");
  std::multiset<std::string> beliefs;
  for (const auto& w : an.firing_states()) beliefs.insert(an.belief(w).str());
  c.expect_eq(beliefs, std::multiset<std::string>{"1/1", "99/100", "0/1"}, "firing beliefs");
  c.expect_eq(an.threshold_measure(Rational(19, 20)), Rational(991, 1000), "threshold_measure(19/20)");
  c.expect_eq(oracle::threshold_measure(tree, both(), "A", "fireA", Rational(19, 20)), Rational(991, 1000),
              "oracle threshold_measure(19/20)");
  // sub-threshold firing, summed directly over acting runs
  Rational below(0);
  an.acting_runs().for_each([&](std::size_t r) {
    if (an.run_belief(r) < Rational(19, 20)) below += sys.run_measure(r);
  });
  c.expect_eq(below / sys.measure(an.acting_runs()), Rational(9, 1000), "sub-threshold conditional measure");
  c.detail = "success 99/100, beliefs {1, 99/100, 0}, threshold measure 991/1000, below 9/1000";
}

void fs_refrain(Criterion& c) {
  PpsTree tree = build_tree(builtin_fs_refrain());
  System sys(tree);
  Rational s = success_probability(sys, both(), kFireA);
  c.expect_eq(s, Rational(990, 991), "refrain success");
  c.expect_eq(oracle::action_stats(tree, both(), "A", "fireA").success, Rational(990, 991), "oracle refrain success");
  c.expect(s.approx(5) == "0.99899", "≈ 0.99899, got " + s.approx(5));
  c.detail = "990/991 ≈ " + s.approx(5);
}

void fig1(Criterion& c) {
  System sys(builtin_fig1());
  Fact psi = parse_fact("not performs(i, alpha)");
  Fact phi = parse_fact("performs(i, alpha)");
  ActionAnalysis a_psi(sys, psi, kAlpha);
  ActionAnalysis a_phi(sys, phi, kAlpha);
  c.expect_eq(a_psi.belief(*detail::extreme_state(a_psi, false)), Rational(1, 2), "psi min firing belief");
  c.expect_eq(a_psi.success_probability(), Rational(0), "psi success");
  c.expect_eq(a_phi.success_probability(), Rational(1), "phi success");
  c.expect_eq(a_phi.expected_belief(), Rational(1, 2), "phi expected belief");
  c.expect_eq(oracle::action_stats(builtin_fig1(), phi, "i", "alpha").expected, Rational(1, 2), "oracle expected");
  for (const auto* an : {&a_psi, &a_phi}) {
    AnalysisReport r = check_local_state_independence(*an);
    c.expect(r.verdict == Verdict::Fails, "independence fails for " + render(an->fact()));
    c.expect(!r.witnesses.empty() && r.witnesses[0].nodes == std::vector<std::string>{"g0"},
             "witness g0 for " + render(an->fact()));
  }
  c.detail = "psi: min belief 1/2, success 0; phi: success 1, expected 1/2; witness g0";
}

void counterexample(Criterion& c) {
  std::vector<std::pair<Rational, Rational>> grid{
      {Rational(9, 10), Rational(1, 100)}, {Rational(3, 4), Rational(1, 4)}, {Rational(99, 100), Rational(1, 1000)}};
  Fact bit = parse_fact("var(j, bit) == 1");
  for (const auto& [p, e] : grid) {
    PpsTree tree = build_counterexample(p, e);
    System sys(tree);
    ActionAnalysis an(sys, bit, kAlpha);
    std::string tag = "(p=" + p.str() + ", eps=" + e.str() + ") ";
    c.expect_eq(an.success_probability(), p, tag + "success");
    c.expect_eq(an.threshold_measure(p), e, tag + "threshold_measure(p)");
    c.expect_eq(an.run_belief(0), (p - e) / (Rational(1) - e), tag + "merged belief");
    c.expect_eq(an.run_belief(1), (p - e) / (Rational(1) - e), tag + "merged belief r'");
    c.expect_eq(an.expected_belief(), p, tag + "expected belief");
    auto o = oracle::action_stats(tree, bit, "i", "alpha");
    c.expect_eq(o.success, p, tag + "oracle success");
    c.expect_eq(o.expected, p, tag + "oracle expected");
  }
  c.detail = "3 parameter pairs, 4 exact identities each";
}

// Per-tree oracle data shared by the property criteria.
struct OracleTree {
  const PpsTree* tree;
  std::vector<oracle::ORun> runs;
  int horizon;
  // group[agent][t][r] = index of r_agent(t) among agent's states at time t
  std::map<std::string, std::vector<std::vector<int>>> group;

  explicit OracleTree(const PpsTree& t) : tree(&t), runs(oracle::runs(t)) {
    horizon = static_cast<int>(runs.front().path.size()) - 1;
    for (const auto& agent : t.agents()) {
      auto& g = group[agent];
      g.assign(static_cast<std::size_t>(horizon + 1), std::vector<int>(runs.size()));
      for (int time = 0; time <= horizon; ++time) {
        std::map<LocalState, int> ids;
        for (std::size_t r = 0; r < runs.size(); ++r)
          g[static_cast<std::size_t>(time)][r] =
              ids.emplace(oracle::local(t, runs[r], agent, time), static_cast<int>(ids.size())).first->second;
      }
    }
  }

  std::vector<std::vector<bool>> truth(const Fact& f) const {
    std::vector<std::vector<bool>> out(runs.size(), std::vector<bool>(static_cast<std::size_t>(horizon + 1)));
    for (std::size_t r = 0; r < runs.size(); ++r)
      for (int t = 0; t <= horizon; ++t) out[r][static_cast<std::size_t>(t)] = oracle::holds(*tree, runs[r], t, f);
    return out;
  }

  // Bel at (r,t) for every point, from a truth table.
  std::vector<std::vector<Rational>> beliefs(const std::string& agent, const std::vector<std::vector<bool>>& tv) const {
    const auto& g = group.at(agent);
    std::vector<std::vector<Rational>> out(runs.size(), std::vector<Rational>(static_cast<std::size_t>(horizon + 1)));
    for (int t = 0; t <= horizon; ++t) {
      std::map<int, std::pair<Rational, Rational>> acc;
      for (std::size_t r = 0; r < runs.size(); ++r) {
        auto& [num, den] = acc[g[static_cast<std::size_t>(t)][r]];
        den += runs[r].measure;
        if (tv[r][static_cast<std::size_t>(t)]) num += runs[r].measure;
      }
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& [num, den] = acc[g[static_cast<std::size_t>(t)][r]];
        out[r][static_cast<std::size_t>(t)] = num / den;
      }
    }
    return out;
  }

  // Past-based: all runs through the same node agree at its depth.
  bool past_based(const std::vector<std::vector<bool>>& tv) const {
    std::map<int, bool> at_node;
    for (std::size_t r = 0; r < runs.size(); ++r)
      for (int t = 0; t <= horizon; ++t) {
        auto [it, fresh] = at_node.emplace(runs[r].path[static_cast<std::size_t>(t)], tv[r][static_cast<std::size_t>(t)]);
        if (!fresh && it->second != tv[r][static_cast<std::size_t>(t)]) return false;
      }
    return true;
  }
};

struct SuiteOracleTallies {
  long expectation_pairs = 0;
  long deterministic_pairs = 0;
  std::vector<std::string> expectation_failures;
  std::vector<std::string> independence_failures;
};

// Recomputes, for every past-based fact and every deterministic action, the
// expectation identity and the independence identity from the oracle.
void oracle_suite(const SuiteParams& sp, SuiteOracleTallies& out) {
  for (int k = 0; k < sp.cases; ++k) {
    std::uint64_t seed = sp.first_seed + static_cast<std::uint64_t>(k);
    PpsTree tree = random_pps(suite_tree_params(sp, seed));
    OracleTree ot(tree);
    System sys(tree);
    auto facts = suite_facts(tree, seed, sp.facts_per_tree);

    struct Act {
      std::string agent, action;
      std::vector<int> fire;  // firing time per run, -1 if none
      bool deterministic;
    };
    std::vector<Act> acts;
    for (const auto& agent : tree.agents())
      for (const auto& action : tree.actions().at(agent)) {
        auto tv = ot.truth(Fact::performs(agent, action));
        Act a{agent, action, std::vector<int>(ot.runs.size(), -1), true};
        bool proper = false, repeated = false;
        for (std::size_t r = 0; r < ot.runs.size(); ++r)
          for (int t = 0; t <= ot.horizon; ++t)
            if (tv[r][static_cast<std::size_t>(t)]) {
              if (a.fire[r] >= 0) repeated = true;
              a.fire[r] = t;
              proper = true;
            }
        if (!proper || repeated) continue;
        // deterministic: equal local states agree on performing the action
        const auto& g = ot.group.at(agent);
        for (int t = 0; t <= ot.horizon && a.deterministic; ++t) {
          std::map<int, bool> seen;
          for (std::size_t r = 0; r < ot.runs.size(); ++r) {
            auto [it, fresh] = seen.emplace(g[static_cast<std::size_t>(t)][r], tv[r][static_cast<std::size_t>(t)]);
            if (!fresh && it->second != tv[r][static_cast<std::size_t>(t)]) a.deterministic = false;
          }
        }
        if (a.deterministic != is_deterministic_action(sys, {agent, action}))
          out.independence_failures.push_back("seed " + std::to_string(seed) + ": determinism of " + agent + "." +
                                              action + " disagrees with oracle");
        acts.push_back(std::move(a));
      }

    for (const auto& f : facts) {
      auto tv = ot.truth(f);
      bool past = ot.past_based(tv);
      for (const auto& a : acts) {
        if (!past && !a.deterministic) continue;
        auto bel = ot.beliefs(a.agent, tv);
        std::string label = "seed " + std::to_string(seed) + ", " + render(f) + " vs " + a.agent + "." + a.action;
        if (past) {
          ++out.expectation_pairs;
          Rational acting(0), hit(0), weighted(0);
          for (std::size_t r = 0; r < ot.runs.size(); ++r) {
            int t = a.fire[r];
            if (t < 0) continue;
            acting += ot.runs[r].measure;
            if (tv[r][static_cast<std::size_t>(t)]) hit += ot.runs[r].measure;
            weighted += ot.runs[r].measure * bel[r][static_cast<std::size_t>(t)];
          }
          if (hit / acting != weighted / acting) out.expectation_failures.push_back("oracle: " + label);
          AnalysisReport rep = verify_expectation(sys, f, {a.agent, a.action});
          if (rep.verdict != Verdict::Holds || rep.value("success_probability") != hit / acting ||
              rep.value("expected_belief") != weighted / acting)
            out.expectation_failures.push_back("library: " + label);
        }
        if (a.deterministic) {
          ++out.deterministic_pairs;
          // product identity at every occurring local state
          const auto& g = ot.group.at(a.agent);
          bool independent = true;
          for (int t = 0; t <= ot.horizon; ++t) {
            std::map<int, std::array<Rational, 4>> acc;  // occurs, fact, acts, both
            for (std::size_t r = 0; r < ot.runs.size(); ++r) {
              auto& w = acc[g[static_cast<std::size_t>(t)][r]];
              const Rational& m = ot.runs[r].measure;
              bool fh = tv[r][static_cast<std::size_t>(t)], ah = a.fire[r] == t;
              w[0] += m;
              if (fh) w[1] += m;
              if (ah) w[2] += m;
              if (fh && ah) w[3] += m;
            }
            for (const auto& [id, w] : acc)
              if ((w[1] / w[0]) * (w[2] / w[0]) != w[3] / w[0]) independent = false;
          }
          bool lib = check_local_state_independence(sys, f, {a.agent, a.action}).verdict == Verdict::Holds;
          if (!independent) out.independence_failures.push_back("oracle: " + label);
          if (!lib) out.independence_failures.push_back("library: " + label);
        }
      }
    }
  }
}

void report_tally(Criterion& c, const SuiteResult& res, const std::string& name, bool need_applicable = true) {
  auto it = res.properties.find(name);
  if (it == res.properties.end()) {
    c.expect(false, "property " + name + " never checked");
    return;
  }
  const PropertyTally& t = it->second;
  c.expect(t.checked > 0, name + " checked no instances");
  if (need_applicable) c.expect(t.applicable > 0, name + " never had its hypotheses met");
  for (const auto& e : t.examples) c.expect(false, name + ": " + e);
  if (t.violations > static_cast<long>(t.examples.size()))
    c.expect(false, name + ": " + std::to_string(t.violations) + " violations in total");
}

std::string tally(const SuiteResult& res, const std::string& name) {
  const auto& t = res.properties.at(name);
  return name + " " + std::to_string(t.applicable) + "/" + std::to_string(t.checked);
}

// Run-set equivalences between liftings, by exhaustive comparison of oracle run
// sets, cross-checked against the library's liftings.
void equivalences_on(Criterion& c, const PpsTree& tree, const std::string& label, std::mt19937_64& gen) {
  System sys(tree);
  OracleTree ot(tree);
  std::vector<Fact> facts{Fact::truth(), Fact::falsity()};
  for (int k = 0; k < 4; ++k) facts.push_back(random_fact(tree, gen));
  for (const auto& agent : tree.agents()) {
    std::size_t i = sys.agent_index(agent);
    for (const auto& action : tree.actions().at(agent)) {
      ActionOccurrences occ = occurrences(sys, agent, action);
      if (!occ.proper()) continue;
      auto alpha_tv = ot.truth(Fact::performs(agent, action));
      std::vector<bool> r_alpha(ot.runs.size(), false);
      for (std::size_t r = 0; r < ot.runs.size(); ++r)
        for (int t = 0; t <= ot.horizon; ++t)
          if (alpha_tv[r][static_cast<std::size_t>(t)]) r_alpha[r] = true;
      for (const auto& phi : facts) {
        auto phi_tv = ot.truth(phi);
        PointTable lib_phi = evaluate(sys, phi);
        RunSet lib_phi_at_alpha = at_action(lib_phi, occ, sys);
        std::vector<bool> phi_at_alpha(ot.runs.size(), false);
        for (std::size_t r = 0; r < ot.runs.size(); ++r)
          for (int t = 0; t <= ot.horizon; ++t)
            if (alpha_tv[r][static_cast<std::size_t>(t)] && phi_tv[r][static_cast<std::size_t>(t)]) phi_at_alpha[r] = true;
        for (std::size_t r = 0; r < ot.runs.size(); ++r) {
          c.expect(phi_at_alpha[r] == (phi_at_alpha[r] && r_alpha[r]), label + " (e)");
          c.expect(phi_at_alpha[r] == lib_phi_at_alpha.test(r), label + " phi@alpha matches library");
        }
        PointTable lib_fa = evaluate(sys, Fact::both(phi, Fact::performs(agent, action)));
        PointTable lib_alpha = evaluate(sys, Fact::performs(agent, action));
        for (StateId s = 0; s < static_cast<StateId>(sys.local_states(i).size()); ++s) {
          const LocalState& l = sys.local_states(i)[static_cast<std::size_t>(s)];
          const std::size_t t = static_cast<std::size_t>(l.time);
          RunSet lib_a_at_l = at_state(lib_alpha, sys, i, s);
          RunSet lib_fa_at_l = at_state(lib_fa, sys, i, s);
          for (std::size_t r = 0; r < ot.runs.size(); ++r) {
            bool r_l = oracle::local(tree, ot.runs[r], agent, l.time) == l;
            bool a_at_l = r_l && alpha_tv[r][t];
            bool fa_at_l = r_l && alpha_tv[r][t] && phi_tv[r][t];
            c.expect(a_at_l == (a_at_l && r_l), label + " (a)");
            c.expect(fa_at_l == (fa_at_l && r_l), label + " (b)");
            c.expect((fa_at_l && a_at_l) == fa_at_l, label + " (c)");
            c.expect(a_at_l == (a_at_l && r_alpha[r]), label + " (d)");
            c.expect(a_at_l == lib_a_at_l.test(r) && fa_at_l == lib_fa_at_l.test(r),
                     label + " liftings at a local state match library");
          }
        }
      }
    }
  }
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Criterion> cs;
  auto run = [&](int id, std::string title, const std::function<void(Criterion&)>& body) {
    Criterion c{id, std::move(title), {}, {}};
    try {
      body(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    cs.push_back(std::move(c));
  };

  run(1, "FS golden values", fs_golden);
  run(2, "FS-refrain improvement", fs_refrain);
  run(3, "single mixed step counterexamples", fig1);
  run(4, "threshold counterexample construction", counterexample);

  SuiteParams sp;  // seeds 1-200, depth 4, branching 3, up to 3 agents
  SuiteResult suite;
  SuiteOracleTallies ot;
  std::string suite_error;
  try {
    suite = run_suite(sp);
    oracle_suite(sp, ot);
  } catch (const std::exception& e) {
    suite_error = e.what();
  }

  run(5, "expectation identity on past-based facts (200 random trees)", [&](Criterion& c) {
    c.expect(suite_error.empty(), suite_error);
    report_tally(c, suite, "expectation_past_based");
    report_tally(c, suite, "independence_past_based");
    report_tally(c, suite, "expectation_grouped");
    report_tally(c, suite, "expectation_independent");
    c.expect(ot.expectation_pairs > 0, "oracle checked no pairs");
    for (const auto& e : ot.expectation_failures) c.expect(false, e);
    c.detail = tally(suite, "expectation_past_based") + ", oracle pairs " + std::to_string(ot.expectation_pairs);
  });
  run(6, "independence for deterministic actions (200 random trees)", [&](Criterion& c) {
    c.expect(suite_error.empty(), suite_error);
    report_tally(c, suite, "independence_deterministic");
    c.expect(ot.deterministic_pairs > 0, "oracle checked no pairs");
    for (const auto& e : ot.independence_failures) c.expect(false, e);
    c.detail = tally(suite, "independence_deterministic") + ", oracle pairs " + std::to_string(ot.deterministic_pairs);
  });
  run(7, "sufficiency, sometimes and pak implications (200 random trees)", [&](Criterion& c) {
    c.expect(suite_error.empty(), suite_error);
    for (const char* name : {"sufficiency", "sometimes", "pak", "certainty", "belief_at_firing_state"})
      report_tally(c, suite, name);
    c.detail = tally(suite, "sufficiency") + ", " + tally(suite, "sometimes") + ", " + tally(suite, "pak") + ", " +
               tally(suite, "certainty");
  });
  run(8, "run-set equivalences on builtins and 50 random trees", [&](Criterion& c) {
    std::mt19937_64 gen(2024);
    equivalences_on(c, build_tree(builtin_fs()), "fs", gen);
    equivalences_on(c, build_tree(builtin_fs_refrain()), "fs-refrain", gen);
    equivalences_on(c, builtin_fig1(), "fig1", gen);
    equivalences_on(c, build_counterexample(Rational(9, 10), Rational(1, 100)), "counterexample", gen);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      RandomPpsParams p = suite_tree_params(sp, seed);
      equivalences_on(c, random_pps(p), "seed " + std::to_string(seed), gen);
    }
    c.detail = "4 builtins + 50 random trees";
  });
  run(9, "infrastructure", [&](Criterion& c) {
    std::vector<std::pair<std::string, PpsTree>> trees{{"fs", build_tree(builtin_fs())},
                                                       {"fs-refrain", build_tree(builtin_fs_refrain())},
                                                       {"fig1", builtin_fig1()},
                                                       {"counterexample", build_counterexample(Rational(9, 10), Rational(1, 100))}};
    namespace fsys = std::filesystem;
    const fsys::path models(PAKCHECK_MODELS_DIR);
    const fsys::path tmp = fsys::temp_directory_path() / "pakcheck_acceptance";
    fsys::create_directories(tmp);
    int files = 0;
    for (const auto& entry : fsys::directory_iterator(models)) {
      if (entry.path().extension() != ".json") continue;
      ++files;
      Model m = load_model(entry.path().string());
      trees.emplace_back(entry.path().filename().string(), tree_of(m));
      fsys::path out = tmp / entry.path().filename();
      save_model(m, out.string());
      c.expect(slurp(out) == slurp(entry.path()), entry.path().filename().string() + " re-save is byte-identical");
    }
    c.expect(files >= 2, "model fixtures present");
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      PpsTree t = random_pps(suite_tree_params(sp, seed));
      fsys::path a = tmp / "a.json", b = tmp / "b.json";
      save_model(t, a.string());
      Model back = load_model(a.string());
      c.expect(std::get<PpsTree>(back) == t, "seed " + std::to_string(seed) + " loads back equal");
      save_model(back, b.string());
      c.expect(slurp(a) == slurp(b), "seed " + std::to_string(seed) + " round-trips byte-identically");
      trees.emplace_back("seed " + std::to_string(seed), std::move(t));
    }
    for (const auto& [name, t] : trees) {
      ValidationReport vr = validate_tree(t);
      c.expect(vr.ok(), name + " invalid: " + vr.str());
      if (!vr.ok()) continue;
      Rational total(0);
      for (const auto& r : oracle::runs(t)) total += r.measure;
      c.expect_eq(total, Rational(1), name + " run measures (oracle) sum");
      System sys(t);
      c.expect_eq(sys.measure(sys.all()), Rational(1), name + " run measures sum");
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.expect(elapsed < 60.0, "acceptance run took " + std::to_string(elapsed) + " s");
    std::ostringstream os;
    os << trees.size() << " trees validated, " << files << " fixtures re-saved, elapsed " << std::fixed
       << std::setprecision(1) << elapsed << " s";
    c.detail = os.str();
  });

  int failed = 0;
  for (const auto& c : cs) {
    bool ok = c.failures.empty();
    if (!ok) ++failed;
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.title;
    if (!c.detail.empty()) std::cout << " [" << c.detail << "]";
    std::cout << "\n";
    for (const auto& f : c.failures) std::cout << "      " << f << "\n";
  }
  std::cout << (cs.size() - static_cast<std::size_t>(failed)) << "/" << cs.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
