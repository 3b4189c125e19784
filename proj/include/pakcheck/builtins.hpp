#pragma once

#include <string>

#include "pakcheck/protocol.hpp"

namespace pak {

namespace detail {

inline Value sym(const char* s) { return Symbol{s}; }
inline Value num(std::int64_t v) { return v; }

inline ProtocolSpec firing_squad(bool refrain_on_no) {
  ProtocolSpec spec;
  spec.agents = {"A", "B"};
  spec.horizon = 3;
  for (std::int64_t go : {0, 1}) {
    InitialState s;
    s.id = "go" + std::to_string(go);
    s.prob = Rational(1, 2);
    s.env = {{"go", num(go)}};
    s.locals["A"] = {{"go", num(go)}, {"reply", sym("none")}};
    s.locals["B"] = {{"received", num(0)}};
    spec.initial.push_back(std::move(s));
  }

  auto& alice = spec.agent_rules["A"];
  alice.push_back({Guard{0, {{"A", "go", num(1)}}, {}, {}}, {{"send", Rational(1)}}});
  if (refrain_on_no) alice.push_back({Guard{2, {{"A", "go", num(1)}, {"A", "reply", sym("no")}}, {}, {}}, {{kSkip, Rational(1)}}});
  alice.push_back({Guard{2, {{"A", "go", num(1)}}, {}, {}}, {{"fireA", Rational(1)}}});

  auto& bob = spec.agent_rules["B"];
  bob.push_back({Guard{1, {{"B", "received", num(0)}}, {}, {}}, {{"send_no", Rational(1)}}});
  bob.push_back({Guard{1, {}, {}, {}}, {{"send_yes", Rational(1)}}});
  bob.push_back({Guard{2, {{"B", "received", num(0)}}, {}, {}}, {{kSkip, Rational(1)}}});
  bob.push_back({Guard{2, {}, {}, {}}, {{"fireB", Rational(1)}}});

  // Each of Alice's two messages is lost independently with probability 1/10.
  spec.env_rules.push_back({Guard{0, {{kEnv, "go", num(1)}}, {}, {}},
                            {{"deliver_both", Rational(81, 100)},
                             {"deliver_first", Rational(9, 100)},
                             {"deliver_second", Rational(9, 100)},
                             {"deliver_none", Rational(1, 100)}}});
  spec.env_rules.push_back({Guard{1, {}, {}, {}}, {{"deliver_reply", Rational(9, 10)}, {"lose_reply", Rational(1, 10)}}});

  auto on = [](std::map<std::string, std::string> acts) { return Guard{std::nullopt, {}, {}, std::move(acts)}; };
  spec.transitions.push_back({on({{kEnv, "deliver_both"}}), {{"B", "received", num(2)}}});
  spec.transitions.push_back({on({{kEnv, "deliver_first"}}), {{"B", "received", num(1)}}});
  spec.transitions.push_back({on({{kEnv, "deliver_second"}}), {{"B", "received", num(1)}}});
  spec.transitions.push_back({on({{"B", "send_yes"}, {kEnv, "deliver_reply"}}), {{"A", "reply", sym("yes")}}});
  spec.transitions.push_back({on({{"B", "send_no"}, {kEnv, "deliver_reply"}}), {{"A", "reply", sym("no")}}});
  spec.transitions.push_back({Guard{}, {}});
  return spec;
}

inline GlobalState make_state(int time, VarMap env, std::map<std::string, VarMap> locals,
                              std::vector<HistoryRecord> history) {
  GlobalState g;
  g.env.vars = std::move(env);
  g.env.history = std::move(history);
  for (auto& [a, vars] : locals) g.locals.emplace(a, LocalState{a, time, std::move(vars)});
  return g;
}

}  // namespace detail

/// The firing-squad protocol FS: Alice (go = 1 w.p. 1/2) sends Bob two
/// lossy messages, Bob answers YES/NO and fires iff he heard from her, Alice
/// fires at time 2 whenever go = 1.
inline ProtocolSpec builtin_fs() { return detail::firing_squad(false); }

/// FS, except Alice skips firing after receiving NO.
inline ProtocolSpec builtin_fs_refrain() { return detail::firing_squad(true); }

/// Single agent i, single initial state g0, one mixed step {alpha, alpha_prime}
/// each with probability 1/2.
inline PpsTree builtin_fig1() {
  PpsTree tree({"i"}, {{"i", {"alpha", "alpha_prime"}}, {kEnv, {}}});
  int g0 = tree.add_node(PpsTree::kRoot, "g0", Rational(1), detail::make_state(0, {}, {{"i", {}}}, {}));
  for (const char* act : {"alpha", "alpha_prime"})
    tree.add_node(g0, std::string("g0/") + act, Rational(1, 2),
                  detail::make_state(1, {}, {{"i", {}}}, {{0, kEnv, kSkip}, {0, "i", act}}));
  return tree;
}

/// Three-run system in which i performs alpha with belief just below p in
/// most runs yet mu(phi@alpha | R(alpha)) = p, for phi = (bit = 1).
///
/// Runs: r (bit 0, measure 1-p), r' (bit 1, j sends m, measure p-eps),
/// r'' (bit 1, j sends m', measure eps). i cannot tell r from r'.
inline PpsTree build_counterexample(const Rational& p, const Rational& eps) {
  if (!(Rational(0) < eps && eps < p && p < Rational(1))) throw Error("counterexample requires 0<ε<p<1");
  using detail::make_state;
  using detail::num;
  using detail::sym;

  PpsTree tree({"i", "j"}, {{"i", {"alpha"}}, {"j", {"send_m", "send_m_prime"}}, {kEnv, {}}});
  auto round0 = [](const char* send) {
    return std::vector<HistoryRecord>{{0, kEnv, kSkip}, {0, "i", kSkip}, {0, "j", send}};
  };
  auto round1 = [](std::vector<HistoryRecord> h) {
    h.push_back({1, kEnv, kSkip});
    h.push_back({1, "i", "alpha"});
    h.push_back({1, "j", kSkip});
    return h;
  };
  auto add_run = [&](int init, std::int64_t bit, const char* send, const char* msg, const Rational& prob,
                     const std::string& id) {
    auto h0 = round0(send);
    int mid = tree.add_node(init, id, prob, make_state(1, {}, {{"i", {{"msg", sym(msg)}}}, {"j", {{"bit", num(bit)}}}}, h0));
    tree.add_node(mid, id + "/alpha", Rational(1),
                  make_state(2, {}, {{"i", {{"msg", sym(msg)}}}, {"j", {{"bit", num(bit)}}}}, round1(h0)));
  };

  int s0 = tree.add_node(PpsTree::kRoot, "s0", Rational(1) - p, make_state(0, {}, {{"i", {}}, {"j", {{"bit", num(0)}}}}, {}));
  int s1 = tree.add_node(PpsTree::kRoot, "s1", p, make_state(0, {}, {{"i", {}}, {"j", {{"bit", num(1)}}}}, {}));
  add_run(s0, 0, "send_m", "m", Rational(1), "s0/m");
  add_run(s1, 1, "send_m", "m", Rational(1) - eps / p, "s1/m");
  add_run(s1, 1, "send_m_prime", "m_prime", eps / p, "s1/m_prime");
  return tree;
}

}  // namespace pak
