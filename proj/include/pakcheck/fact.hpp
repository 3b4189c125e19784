#pragma once

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pakcheck/system.hpp"

namespace pak {

/// Expression tree for a condition evaluable at points (r, t).
struct Fact {
  enum class Kind { True, False, Performs, VarEq, EnvVarEq, TimeEq, Not, And, Or, Implies, Ever };

  Kind kind = Kind::True;
  std::string agent;  // Performs, VarEq
  std::string name;   // action (Performs) or variable (VarEq, EnvVarEq)
  Value literal = std::int64_t{0};
  int time = 0;  // TimeEq
  std::vector<Fact> kids;

  static Fact of(Kind k, std::vector<Fact> kids = {}) {
    Fact f;
    f.kind = k;
    f.kids = std::move(kids);
    return f;
  }
  static Fact truth() { return Fact{}; }
  static Fact falsity() { return of(Kind::False); }
  static Fact performs(std::string agent, std::string action) {
    Fact f = of(Kind::Performs);
    f.agent = std::move(agent);
    f.name = std::move(action);
    return f;
  }
  static Fact var_eq(std::string agent, std::string var, Value v) {
    Fact f = performs(std::move(agent), std::move(var));
    f.kind = Kind::VarEq;
    f.literal = std::move(v);
    return f;
  }
  static Fact envvar_eq(std::string var, Value v) {
    Fact f = of(Kind::EnvVarEq);
    f.name = std::move(var);
    f.literal = std::move(v);
    return f;
  }
  static Fact time_eq(int t) {
    Fact f = of(Kind::TimeEq);
    f.time = t;
    return f;
  }
  static Fact negate(Fact f) { return of(Kind::Not, {std::move(f)}); }
  static Fact both(Fact a, Fact b) { return of(Kind::And, {std::move(a), std::move(b)}); }
  static Fact either(Fact a, Fact b) { return of(Kind::Or, {std::move(a), std::move(b)}); }
  static Fact implies(Fact a, Fact b) { return of(Kind::Implies, {std::move(a), std::move(b)}); }
  static Fact ever(Fact f) { return of(Kind::Ever, {std::move(f)}); }

  friend bool operator==(const Fact&, const Fact&) = default;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t pos, const std::string& msg)
      : Error("syntax error at position " + std::to_string(pos) + ": " + msg), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

// ---------------------------------------------------------------------------
// Parsing and rendering

namespace detail {

class FactParser {
 public:
  explicit FactParser(std::string_view text) : s_(text) {}

  Fact parse() {
    Fact f = fact();
    skip_ws();
    if (i_ != s_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  Fact fact() {
    Fact lhs = orexpr();
    if (keyword("implies")) {
      Fact rhs = orexpr();
      if (peek_keyword("implies")) fail("'implies' is not associative; add parentheses");
      return Fact::implies(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }
  Fact orexpr() {
    Fact f = andexpr();
    if (!peek_keyword("or")) return f;
    Fact out = Fact::of(Fact::Kind::Or);
    out.kids.push_back(std::move(f));
    while (keyword("or")) out.kids.push_back(andexpr());
    return out;
  }
  Fact andexpr() {
    Fact f = unary();
    if (!peek_keyword("and")) return f;
    Fact out = Fact::of(Fact::Kind::And);
    out.kids.push_back(std::move(f));
    while (keyword("and")) out.kids.push_back(unary());
    return out;
  }
  Fact unary() {
    skip_ws();
    if (keyword("not")) return Fact::negate(unary());
    if (keyword("ever")) {
      expect('(');
      Fact inner = fact();
      expect(')');
      return Fact::ever(std::move(inner));
    }
    if (peek() == '(') {
      ++i_;
      Fact inner = fact();
      expect(')');
      return inner;
    }
    return atom();
  }
  Fact atom() {
    skip_ws();
    std::size_t at = i_;
    if (keyword("true")) return Fact::truth();
    if (keyword("false")) return Fact::falsity();
    if (keyword("performs")) {
      expect('(');
      std::string agent = ident();
      expect(',');
      std::string action = ident();
      expect(')');
      return Fact::performs(agent, action);
    }
    if (keyword("var")) {
      expect('(');
      std::string agent = ident();
      expect(',');
      std::string var = ident();
      expect(')');
      expect_eq();
      return Fact::var_eq(agent, var, literal());
    }
    if (keyword("envvar")) {
      expect('(');
      std::string var = ident();
      expect(')');
      expect_eq();
      return Fact::envvar_eq(var, literal());
    }
    if (keyword("time")) {
      expect_eq();
      skip_ws();
      std::size_t p = i_;
      Value v = literal();
      auto n = std::get_if<std::int64_t>(&v);
      if (!n) throw SyntaxError(p, "time must be compared with an integer");
      return Fact::time_eq(static_cast<int>(*n));
    }
    throw SyntaxError(at, "expected an atom");
  }

  Value literal() {
    skip_ws();
    std::size_t start = i_;
    if (i_ < s_.size() && (s_[i_] == '-' || std::isdigit(static_cast<unsigned char>(s_[i_])))) {
      ++i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      std::string digits(s_.substr(start, i_ - start));
      if (digits == "-") throw SyntaxError(start, "expected digits");
      try {
        return static_cast<std::int64_t>(std::stoll(digits));
      } catch (const std::exception&) {
        throw SyntaxError(start, "integer literal out of range");
      }
    }
    if (i_ < s_.size() && is_ident_start(s_[i_])) {
      std::string id = ident();
      if (id == "true") return true;
      if (id == "false") return false;
      return Symbol{id};
    }
    throw SyntaxError(start, "expected a literal");
  }

  std::string ident() {
    skip_ws();
    std::size_t start = i_;
    if (i_ >= s_.size() || !is_ident_start(s_[i_])) throw SyntaxError(start, "expected an identifier");
    while (i_ < s_.size() && is_ident_char(s_[i_])) ++i_;
    return std::string(s_.substr(start, i_ - start));
  }

  static bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  char peek() {
    skip_ws();
    return i_ < s_.size() ? s_[i_] : '\0';
  }
  bool peek_keyword(std::string_view kw) {
    skip_ws();
    if (s_.substr(i_, kw.size()) != kw) return false;
    std::size_t end = i_ + kw.size();
    return end >= s_.size() || !is_ident_char(s_[end]);
  }
  bool keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    i_ += kw.size();
    return true;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }
  void expect_eq() {
    skip_ws();
    if (s_.substr(i_, 2) != "==") fail("expected '=='");
    i_ += 2;
  }
  [[noreturn]] void fail(const std::string& msg) { throw SyntaxError(i_, msg); }

  std::string_view s_;
  std::size_t i_ = 0;
};

inline int precedence(const Fact& f) {
  switch (f.kind) {
    case Fact::Kind::Implies: return 0;
    case Fact::Kind::Or: return 1;
    case Fact::Kind::And: return 2;
    default: return 3;
  }
}

inline void render_into(const Fact& f, std::string& out, int min_prec) {
  bool parens = precedence(f) < min_prec;
  if (parens) out += "(";
  using K = Fact::Kind;
  switch (f.kind) {
    case K::True: out += "true"; break;
    case K::False: out += "false"; break;
    case K::Performs: out += "performs(" + f.agent + ", " + f.name + ")"; break;
    case K::VarEq: out += "var(" + f.agent + ", " + f.name + ") == " + to_string(f.literal); break;
    case K::EnvVarEq: out += "envvar(" + f.name + ") == " + to_string(f.literal); break;
    case K::TimeEq: out += "time == " + std::to_string(f.time); break;
    case K::Not:
      out += "not ";
      render_into(f.kids[0], out, 3);
      break;
    case K::Ever:
      out += "ever(";
      render_into(f.kids[0], out, 0);
      out += ")";
      break;
    case K::And:
    case K::Or: {
      const char* op = f.kind == K::And ? " and " : " or ";
      for (std::size_t k = 0; k < f.kids.size(); ++k) {
        if (k) out += op;
        // same-operator children keep their grouping
        render_into(f.kids[k], out, precedence(f) + 1);
      }
      break;
    }
    case K::Implies:
      render_into(f.kids[0], out, 1);
      out += " implies ";
      render_into(f.kids[1], out, 1);
      break;
  }
  if (parens) out += ")";
}

inline int ever_depth(const Fact& f) {
  int d = 0;
  for (const auto& k : f.kids) d = std::max(d, ever_depth(k));
  return d + (f.kind == Fact::Kind::Ever ? 1 : 0);
}

}  // namespace detail

inline Fact parse_fact(std::string_view text) {
  Fact f = detail::FactParser(text).parse();
  if (detail::ever_depth(f) > 1) throw SyntaxError(0, "ever(...) may not be nested inside another ever");
  return f;
}

inline std::string render(const Fact& f) {
  std::string out;
  detail::render_into(f, out, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Binding and evaluation

/// Checks that every atom names an agent, action or variable of the tree.
inline void bind(const PpsTree& tree, const Fact& f) {
  if (detail::ever_depth(f) > 1) throw Error("ever(...) may not be nested inside another ever");
  std::map<std::string, std::set<std::string>> vars;
  std::set<std::string> env_vars;
  for (const auto& n : tree.nodes()) {
    for (const auto& [k, v] : n.state.env.vars) env_vars.insert(k);
    for (const auto& [a, l] : n.state.locals)
      for (const auto& [k, v] : l.vars) vars[a].insert(k);
  }
  auto check = [&](auto&& self, const Fact& g) -> void {
    using K = Fact::Kind;
    switch (g.kind) {
      case K::Performs:
        if (g.agent != kEnv && !tree.has_agent(g.agent)) throw Error("unknown agent " + g.agent);
        if (!tree.has_action(g.agent, g.name)) throw Error("unknown action " + g.agent + "." + g.name);
        break;
      case K::VarEq:
        if (!tree.has_agent(g.agent)) throw Error("unknown agent " + g.agent);
        if (!vars[g.agent].count(g.name)) throw Error("unknown variable " + g.agent + "." + g.name);
        break;
      case K::EnvVarEq:
        if (!env_vars.count(g.name)) throw Error("unknown environment variable " + g.name);
        break;
      default:
        for (const auto& k : g.kids) self(self, k);
    }
  };
  check(check, f);
}

/// Truth table of a fact over all points: table[t] is the set of runs r with
/// (T, r, t) |= fact.
using PointTable = std::vector<RunSet>;

inline PointTable evaluate(const System& sys, const Fact& f) {
  const int H = sys.horizon();
  const std::size_t n = sys.run_count();
  PointTable out(static_cast<std::size_t>(H + 1), sys.none());
  using K = Fact::Kind;

  auto per_point = [&](auto pred) {
    for (int t = 0; t <= H; ++t)
      for (std::size_t r = 0; r < n; ++r)
        if (pred(r, t)) out[static_cast<std::size_t>(t)].set(r);
  };

  switch (f.kind) {
    case K::True:
      for (auto& s : out) s = sys.all();
      break;
    case K::False: break;
    case K::Performs: {
      const HistoryRecord want_base{0, f.agent, f.name};
      per_point([&](std::size_t r, int t) {
        if (t >= H) return false;  // no successor records the action
        const auto& h = sys.state_at(r, t + 1).env.history;
        HistoryRecord want = want_base;
        want.time = t;
        for (auto it = h.rbegin(); it != h.rend() && it->time >= t; ++it)
          if (*it == want) return true;
        return false;
      });
      break;
    }
    case K::VarEq:
      per_point([&](std::size_t r, int t) {
        const auto& locals = sys.state_at(r, t).locals;
        auto it = locals.find(f.agent);
        if (it == locals.end()) return false;
        auto v = it->second.vars.find(f.name);
        return v != it->second.vars.end() && v->second == f.literal;
      });
      break;
    case K::EnvVarEq:
      per_point([&](std::size_t r, int t) {
        const auto& vars = sys.state_at(r, t).env.vars;
        auto v = vars.find(f.name);
        return v != vars.end() && v->second == f.literal;
      });
      break;
    case K::TimeEq:
      if (f.time >= 0 && f.time <= H) out[static_cast<std::size_t>(f.time)] = sys.all();
      break;
    case K::Not: {
      PointTable a = evaluate(sys, f.kids[0]);
      for (std::size_t t = 0; t < out.size(); ++t) out[t] = ~a[t];
      break;
    }
    case K::And: {
      for (auto& s : out) s = sys.all();
      for (const auto& k : f.kids) {
        PointTable a = evaluate(sys, k);
        for (std::size_t t = 0; t < out.size(); ++t) out[t] &= a[t];
      }
      break;
    }
    case K::Or:
      for (const auto& k : f.kids) {
        PointTable a = evaluate(sys, k);
        for (std::size_t t = 0; t < out.size(); ++t) out[t] |= a[t];
      }
      break;
    case K::Implies: {
      PointTable a = evaluate(sys, f.kids[0]);
      PointTable b = evaluate(sys, f.kids[1]);
      for (std::size_t t = 0; t < out.size(); ++t) out[t] = ~a[t] | b[t];
      break;
    }
    case K::Ever: {
      PointTable a = evaluate(sys, f.kids[0]);
      RunSet any = sys.none();
      for (const auto& s : a) any |= s;
      for (auto& s : out) s = any;
      break;
    }
  }
  return out;
}

inline bool holds_at(const System& sys, const Fact& f, std::size_t run, int t) {
  if (run >= sys.run_count() || t < 0 || t > sys.horizon()) throw Error("not a point of T");
  return evaluate(sys, f)[static_cast<std::size_t>(t)].test(run);
}

inline bool holds_at(const System& sys, const Fact& f, const Run& run, int t) {
  return holds_at(sys, f, sys.find_run(run), t);
}

/// R(fact): runs in which the fact holds at some point.
inline RunSet ever_holds(const PointTable& table, const System& sys) {
  RunSet any = sys.none();
  for (const auto& s : table) any |= s;
  return any;
}

inline bool is_run_fact(const PointTable& table) {
  for (std::size_t t = 1; t < table.size(); ++t)
    if (!(table[t] == table[0])) return false;
  return true;
}

inline bool is_run_fact(const System& sys, const Fact& f) { return is_run_fact(evaluate(sys, f)); }

/// True iff at every node v of depth t, all runs through v agree on the fact
/// at time t.
inline bool is_past_based(const System& sys, const PointTable& table) {
  for (int t = 0; t <= sys.horizon(); ++t) {
    std::map<int, bool> seen;
    const RunSet& s = table[static_cast<std::size_t>(t)];
    for (std::size_t r = 0; r < sys.run_count(); ++r) {
      auto [it, fresh] = seen.emplace(sys.node_at(r, t), s.test(r));
      if (!fresh && it->second != s.test(r)) return false;
    }
  }
  return true;
}

inline bool is_past_based(const System& sys, const Fact& f) { return is_past_based(sys, evaluate(sys, f)); }

/// A fact whose truth value is constant along each run, realized as the set
/// of runs satisfying it.
struct RunFact {
  std::string description;
  RunSet runs;
};

/// Runs satisfying a fact about runs (for example ever(...)).
inline RunSet runs_satisfying(const System& sys, const Fact& f) {
  PointTable table = evaluate(sys, f);
  if (!is_run_fact(table)) throw Error("not a fact about runs: " + render(f));
  return table[0];
}

inline const RunSet& runs_satisfying(const RunFact& rf) { return rf.runs; }

// ---------------------------------------------------------------------------
// Actions

/// Occurrence data of agent `agent` performing `action`.
struct ActionOccurrences {
  PointTable points;          // points at which the action is performed
  RunSet runs;                // R(alpha)
  std::optional<std::size_t> repeat_run;  // a run performing it twice, if any
  bool proper() const { return !runs.empty() && !repeat_run; }
};

inline ActionOccurrences occurrences(const System& sys, const std::string& agent, const std::string& action) {
  if (!sys.tree().has_agent(agent) && agent != kEnv) throw Error("unknown agent " + agent);
  if (!sys.tree().has_action(agent, action)) throw Error("unknown action " + agent + "." + action);
  ActionOccurrences occ;
  occ.points = evaluate(sys, Fact::performs(agent, action));
  occ.runs = ever_holds(occ.points, sys);
  RunSet seen = sys.none();
  for (const auto& s : occ.points) {
    RunSet twice = seen & s;
    if (!twice.empty() && !occ.repeat_run) occ.repeat_run = twice.members().front();
    seen |= s;
  }
  return occ;
}

/// phi@alpha: runs where alpha is performed and phi holds at that point.
inline RunSet at_action(const PointTable& fact, const ActionOccurrences& occ, const System& sys) {
  RunSet out = sys.none();
  for (std::size_t t = 0; t < fact.size(); ++t) out |= fact[t] & occ.points[t];
  return out;
}

inline RunFact at_action(const System& sys, const Fact& f, const std::string& agent, const std::string& action) {
  ActionOccurrences occ = occurrences(sys, agent, action);
  if (!occ.proper()) throw Error("φ@α requires a proper action");
  return {"(" + render(f) + ")@" + agent + "." + action, at_action(evaluate(sys, f), occ, sys)};
}

/// phi@l: runs where the local state occurs and phi holds at its point.
inline RunSet at_state(const PointTable& fact, const System& sys, std::size_t agent, StateId s) {
  int t = sys.local_states(agent)[static_cast<std::size_t>(s)].time;
  return sys.runs_with(agent, s) & fact[static_cast<std::size_t>(t)];
}

inline RunFact at_state(const System& sys, const Fact& f, const LocalState& l) {
  auto s = sys.find_local_state(l);
  if (!s) throw Error("local state " + to_string(l) + " does not occur in T");
  return {"(" + render(f) + ")@" + to_string(l), at_state(evaluate(sys, f), sys, sys.agent_index(l.agent), *s)};
}

}  // namespace pak
