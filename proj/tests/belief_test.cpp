#include <gtest/gtest.h>

#include <set>

#include "oracle.hpp"
#include "pakcheck/pakcheck.hpp"

using namespace pak;

namespace {

const ActionRef kFireA{"A", "fireA"};
const ActionRef kAlpha{"i", "alpha"};

std::multiset<std::string> belief_set(const BeliefProfile& p) {
  std::multiset<std::string> out;
  for (const auto& e : p.per_state) out.insert(e.belief.str());
  return out;
}

std::size_t run_with_reply(const System& sys, const char* reply) {
  for (std::size_t r = 0; r < sys.run_count(); ++r)
    if (sys.state_at(r, sys.horizon()).locals.at("A").vars.at("reply") == Value(Symbol{reply}) &&
        sys.state_at(r, 0).env.vars.at("go") == Value(std::int64_t{1}))
      return r;
  throw Error("no such run");
}

}  // namespace

TEST(BeliefAt, TrivialFacts) {
  System sys(build_tree(builtin_fs()));
  for (std::size_t r = 0; r < sys.run_count(); ++r)
    for (int t = 0; t <= sys.horizon(); ++t) {
      EXPECT_EQ(belief_at(sys, "A", Fact::truth(), r, t), Rational(1));
      EXPECT_EQ(belief_at(sys, "B", Fact::falsity(), r, t), Rational(0));
    }
  EXPECT_THROW(belief_at(sys, "A", Fact::truth(), 0, 9), Error);
  EXPECT_THROW(belief_at(sys, "A", Fact::truth(), 99, 0), Error);
}

TEST(BeliefAt, AliceAtFiringTime) {
  System sys(build_tree(builtin_fs()));
  Fact fire_b = Fact::performs("B", "fireB");
  EXPECT_EQ(belief_at(sys, "A", fire_b, run_with_reply(sys, "none"), 2), Rational(99, 100));
  EXPECT_EQ(belief_at(sys, "A", fire_b, run_with_reply(sys, "no"), 2), Rational(0));
  EXPECT_EQ(belief_at(sys, "A", fire_b, run_with_reply(sys, "yes"), 2), Rational(1));
}

TEST(BeliefAt, AgreesWithOracle) {
  std::mt19937_64 gen(77);
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    RandomPpsParams p;
    p.seed = seed;
    p.num_agents = 1 + static_cast<int>(seed % 3);
    PpsTree tree = random_pps(p);
    System sys(tree);
    auto runs = oracle::runs(tree);
    Fact f = random_fact(tree, gen);
    for (const auto& agent : tree.agents())
      for (std::size_t r = 0; r < runs.size(); ++r)
        for (int t = 0; t <= sys.horizon(); ++t)
          EXPECT_EQ(belief_at(sys, agent, f, r, t), oracle::belief(tree, runs, agent, f, runs[r], t));
  }
}

TEST(Profile, Fig1) {
  System sys(builtin_fig1());
  BeliefProfile p = belief_profile(sys, parse_fact("not performs(i, alpha)"), kAlpha);
  ASSERT_EQ(p.per_run.size(), 2u);
  EXPECT_EQ(p.per_run[0], Rational(1, 2));
  EXPECT_EQ(p.per_run[1], Rational(0));
}

TEST(Profile, Counterexample) {
  System sys(build_counterexample(Rational(9, 10), Rational(1, 100)));
  BeliefProfile p = belief_profile(sys, parse_fact("var(j, bit) == 1"), kAlpha);
  EXPECT_EQ(p.per_run, (std::vector<Rational>{Rational(89, 99), Rational(89, 99), Rational(1)}));
  EXPECT_EQ(Rational(89, 99), (Rational(9, 10) - Rational(1, 100)) / (Rational(1) - Rational(1, 100)));
}

TEST(Profile, FsThreeStates) {
  System sys(build_tree(builtin_fs()));
  BeliefProfile p = belief_profile(sys, Fact::performs("B", "fireB"), kFireA);
  EXPECT_EQ(belief_set(p), (std::multiset<std::string>{"1/1", "99/100", "0/1"}));
}

TEST(Profile, Invariants) {
  std::mt19937_64 gen(101);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    RandomPpsParams p;
    p.seed = seed;
    p.num_agents = 1 + static_cast<int>(seed % 3);
    PpsTree tree = random_pps(p);
    System sys(tree);
    Fact f = random_fact(tree, gen);
    for (const auto& agent : tree.agents())
      for (const auto& act : tree.actions().at(agent)) {
        ActionRef a{agent, act};
        if (!occurrences(sys, agent, act).proper()) {
          EXPECT_THROW(belief_profile(sys, f, a), Error);
          continue;
        }
        ActionAnalysis an(sys, f, a);
        BeliefProfile prof = an.profile();
        auto expected = oracle::action_stats(tree, f, agent, act);
        EXPECT_EQ(prof.per_run, expected.per_run);
        EXPECT_EQ(an.success_probability(), expected.success);
        EXPECT_EQ(an.expected_belief(), expected.expected);
        EXPECT_EQ(an.expected_belief(), an.expected_belief_grouped());
        for (std::size_t r = 0; r < sys.run_count(); ++r) {
          EXPECT_GE(prof.per_run[r], Rational(0));
          EXPECT_LE(prof.per_run[r], Rational(1));
          if (!an.acting_runs().test(r)) {
            EXPECT_EQ(prof.per_run[r], Rational(0));
          }
          int slot = an.firing_slot(r);
          if (slot >= 0) {
            EXPECT_EQ(prof.per_run[r], prof.per_state[static_cast<std::size_t>(slot)].belief);
          }
        }
      }
  }
}

TEST(SuccessProbability, Examples) {
  System fs(build_tree(builtin_fs()));
  Fact both = parse_fact("performs(A, fireA) and performs(B, fireB)");
  EXPECT_EQ(success_probability(fs, Fact::truth(), kFireA), Rational(1));
  EXPECT_EQ(success_probability(fs, both, kFireA), Rational(99, 100));
  System refrain(build_tree(builtin_fs_refrain()));
  EXPECT_EQ(success_probability(refrain, both, kFireA), Rational(990, 991));
  EXPECT_THROW(success_probability(fs, both, ActionRef{"A", "fireB"}), Error);
}

TEST(SuccessProbability, MatchesOracleOnBuiltins) {
  PpsTree tree = build_tree(builtin_fs());
  System fs(tree);
  Fact both = parse_fact("performs(A, fireA) and performs(B, fireB)");
  EXPECT_EQ(success_probability(fs, both, kFireA), oracle::action_stats(tree, both, "A", "fireA").success);
}

TEST(ExpectedBelief, Examples) {
  System fs(build_tree(builtin_fs()));
  EXPECT_EQ(expected_belief(fs, Fact::truth(), kFireA), Rational(1));
  Fact fire_b = Fact::performs("B", "fireB");
  EXPECT_EQ(expected_belief(fs, fire_b, kFireA), Rational(99, 100));
  EXPECT_EQ(expected_belief(fs, fire_b, kFireA), success_probability(fs, fire_b, kFireA));
  // hand sum over the three firing states: 81/100+9/100+9/100 heard YES, 1/100*9/10 NO, 1/10 silent
  Rational hand = (Rational(99, 100) * Rational(9, 10)) * 1 + Rational(1, 100) * Rational(9, 10) * 0 +
                  Rational(1, 10) * Rational(99, 100);
  EXPECT_EQ(expected_belief(fs, fire_b, kFireA), hand);

  System fig(builtin_fig1());
  Fact alpha = Fact::performs("i", "alpha");
  EXPECT_EQ(expected_belief(fig, alpha, kAlpha), Rational(1, 2));
  EXPECT_EQ(success_probability(fig, alpha, kAlpha), Rational(1));
}

TEST(ThresholdMeasure, Examples) {
  System fs(build_tree(builtin_fs()));
  Fact fire_b = Fact::performs("B", "fireB");
  EXPECT_EQ(threshold_measure(fs, fire_b, kFireA, Rational(0)), Rational(1));
  EXPECT_EQ(threshold_measure(fs, fire_b, kFireA, Rational(19, 20)), Rational(991, 1000));
  // the threshold is inclusive
  EXPECT_EQ(threshold_measure(fs, fire_b, kFireA, Rational(99, 100)), Rational(991, 1000));
  System ce(build_counterexample(Rational(9, 10), Rational(1, 100)));
  EXPECT_EQ(threshold_measure(ce, parse_fact("var(j, bit) == 1"), kAlpha, Rational(9, 10)), Rational(1, 100));
}

TEST(ThresholdMeasure, MonotoneAndMatchesOracle) {
  std::mt19937_64 gen(55);
  std::vector<Rational> grid;
  for (int k = 0; k <= 12; ++k) grid.emplace_back(k, 12);
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    RandomPpsParams p;
    p.seed = seed;
    PpsTree tree = random_pps(p);
    System sys(tree);
    Fact f = random_fact(tree, gen);
    for (const auto& agent : tree.agents())
      for (const auto& act : tree.actions().at(agent)) {
        if (!occurrences(sys, agent, act).proper()) continue;
        ActionAnalysis an(sys, f, {agent, act});
        Rational prev(1);
        for (const auto& q : grid) {
          Rational m = an.threshold_measure(q);
          if (q > Rational(0)) {
            EXPECT_LE(m, prev);
          }
          prev = m;
          EXPECT_EQ(m, oracle::threshold_measure(tree, f, agent, act, q));
        }
        EXPECT_EQ(an.threshold_measure(Rational(0)), Rational(1));
      }
  }
}

// Bel(phi or chi) = Bel(phi) + Bel(chi) when no point satisfies both.
TEST(BeliefProperties, Additivity) {
  std::mt19937_64 gen(8);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    RandomPpsParams p;
    p.seed = seed;
    p.num_agents = 1 + static_cast<int>(seed % 3);
    PpsTree tree = random_pps(p);
    System sys(tree);
    Fact phi = random_fact(tree, gen);
    Fact chi = Fact::both(random_fact(tree, gen), Fact::negate(phi));
    for (const auto& agent : tree.agents())
      for (std::size_t r = 0; r < sys.run_count(); ++r)
        for (int t = 0; t <= sys.horizon(); ++t)
          EXPECT_EQ(belief_at(sys, agent, Fact::either(phi, chi), r, t),
                    belief_at(sys, agent, phi, r, t) + belief_at(sys, agent, chi, r, t));
  }
}

TEST(ActionRefParse, Forms) {
  EXPECT_EQ(ActionRef::parse("A.fireA"), kFireA);
  EXPECT_THROW(ActionRef::parse("fireA"), Error);
  EXPECT_THROW(ActionRef::parse(".x"), Error);
  EXPECT_THROW(ActionRef::parse("A."), Error);
}
