#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "pakcheck/analysis.hpp"
#include "pakcheck/protocol.hpp"

namespace pak {

using Json = nlohmann::json;

/// Either an explicit tree or a protocol table, as stored in a model file.
using Model = std::variant<PpsTree, ProtocolSpec>;

namespace detail {

inline Json value_json(const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return *i;
  if (auto b = std::get_if<bool>(&v)) return *b;
  return std::get<Symbol>(v).name;
}

inline Value json_value(const Json& j, const std::string& where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return Symbol{j.get<std::string>()};
  throw Error(where + ": variable values must be integers, booleans or symbols");
}

inline Json vars_json(const VarMap& vars) {
  Json out = Json::object();
  for (const auto& [k, v] : vars) out[k] = value_json(v);
  return out;
}

inline VarMap json_vars(const Json& j, const std::string& where) {
  if (!j.is_object()) throw Error(where + ": expected an object of variables");
  VarMap out;
  for (const auto& [k, v] : j.items()) out[k] = json_value(v, where + "." + k);
  return out;
}

inline Rational json_prob(const Json& j, const std::string& where) {
  if (j.is_number_float()) throw Error(where + ": decimal probabilities not allowed; use num/den");
  if (!j.is_string()) throw Error(where + ": probabilities must be \"num/den\" strings");
  try {
    return Rational::parse(j.get<std::string>());
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
}

inline const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(where + ": missing field \"" + key + "\"");
  return j.at(key);
}

inline std::string str_field(const Json& j, const char* key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_string()) throw Error(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline int int_field(const Json& j, const char* key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_number_integer()) throw Error(where + "." + key + ": expected an integer");
  return v.get<int>();
}

// tree payload

inline Json tree_json(const PpsTree& tree) {
  Json j;
  j["format"] = "pps-tree";
  j["version"] = "1";
  j["agents"] = tree.agents();
  Json acts = Json::object();
  for (const auto& [who, set] : tree.actions()) acts[who] = Json(std::vector<std::string>(set.begin(), set.end()));
  j["actions"] = acts;
  Json nodes = Json::array();
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const Node& n = tree.node(static_cast<int>(i));
    Json h = Json::array();
    for (const auto& rec : n.state.env.history) h.push_back(Json::array({rec.time, rec.agent, rec.action}));
    Json locals = Json::object();
    for (const auto& [a, l] : n.state.locals) locals[a] = vars_json(l.vars);
    nodes.push_back({{"id", n.id},
                     {"parent", tree.node(n.parent).id},
                     {"prob", n.prob.str()},
                     {"env", {{"vars", vars_json(n.state.env.vars)}, {"history", h}}},
                     {"locals", locals}});
  }
  j["nodes"] = nodes;
  return j;
}

inline PpsTree json_tree(const Json& j) {
  const Json& agents_j = field(j, "agents", "model");
  if (!agents_j.is_array()) throw Error("model.agents: expected an array");
  std::vector<std::string> agents;
  for (const auto& a : agents_j) {
    if (!a.is_string()) throw Error("model.agents: expected strings");
    agents.push_back(a.get<std::string>());
  }
  ActionAlphabet alphabet;
  const Json& acts = field(j, "actions", "model");
  if (!acts.is_object()) throw Error("model.actions: expected an object");
  for (const auto& [who, list] : acts.items()) {
    auto& set = alphabet[who];
    if (!list.is_array()) throw Error("model.actions." + who + ": expected an array");
    for (const auto& a : list) set.insert(a.get<std::string>());
  }
  PpsTree tree(agents, alphabet);

  const Json& nodes = field(j, "nodes", "model");
  if (!nodes.is_array()) throw Error("model.nodes: expected an array");
  std::map<std::string, int> index{{"root", PpsTree::kRoot}};
  std::vector<bool> placed(nodes.size(), false);
  std::size_t remaining = nodes.size();
  // Nodes may appear in any order; parents are placed before children.
  while (remaining > 0) {
    std::size_t before = remaining;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (placed[k]) continue;
      const Json& n = nodes[k];
      std::string where = "model.nodes[" + std::to_string(k) + "]";
      std::string parent = str_field(n, "parent", where);
      auto it = index.find(parent);
      if (it == index.end()) continue;
      std::string id = str_field(n, "id", where);
      if (index.count(id)) throw Error(where + ": duplicate node id \"" + id + "\"");
      int time = tree.node(it->second).depth + 1;
      GlobalState g;
      const Json& env = field(n, "env", where);
      g.env.vars = json_vars(field(env, "vars", where + ".env"), where + ".env.vars");
      for (const auto& rec : field(env, "history", where + ".env")) {
        if (!rec.is_array() || rec.size() != 3 || !rec[0].is_number_integer() || !rec[1].is_string() ||
            !rec[2].is_string())
          throw Error(where + ".env.history: records must be [time, agent, action]");
        g.env.history.push_back({rec[0].get<int>(), rec[1].get<std::string>(), rec[2].get<std::string>()});
      }
      const Json& locals = field(n, "locals", where);
      if (!locals.is_object()) throw Error(where + ".locals: expected an object");
      for (const auto& [a, vars] : locals.items())
        g.locals.emplace(a, LocalState{a, time, json_vars(vars, where + ".locals." + a)});
      index[id] = tree.add_node(it->second, id, json_prob(field(n, "prob", where), where + ".prob"), std::move(g));
      placed[k] = true;
      --remaining;
    }
    if (remaining == before) throw Error("model.nodes: some nodes have no reachable parent");
  }
  return tree;
}

// protocol payload

inline Json guard_json(const Guard& g) {
  Json j = Json::object();
  if (g.time) j["time"] = *g.time;
  if (!g.vars.empty()) {
    Json vs = Json::array();
    for (const auto& c : g.vars) vs.push_back({{"scope", c.scope}, {"var", c.var}, {"value", value_json(c.value)}});
    j["vars"] = vs;
  }
  if (!g.performed.empty()) {
    Json ps = Json::array();
    for (const auto& c : g.performed) ps.push_back({{"agent", c.agent}, {"action", c.action}, {"time", c.time}});
    j["performed"] = ps;
  }
  if (!g.actions.empty()) j["actions"] = g.actions;
  return j;
}

inline Guard json_guard(const Json& j, const std::string& where) {
  Guard g;
  if (!j.is_object()) throw Error(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (k != "time" && k != "vars" && k != "performed" && k != "actions")
      throw Error(where + ": unknown guard field \"" + k + "\"");
  if (j.contains("time")) g.time = int_field(j, "time", where);
  if (j.contains("vars"))
    for (const auto& c : j.at("vars"))
      g.vars.push_back({str_field(c, "scope", where), str_field(c, "var", where),
                        json_value(field(c, "value", where), where + ".vars")});
  if (j.contains("performed"))
    for (const auto& c : j.at("performed"))
      g.performed.push_back({str_field(c, "agent", where), str_field(c, "action", where), int_field(c, "time", where)});
  if (j.contains("actions"))
    for (const auto& [who, act] : j.at("actions").items()) g.actions[who] = act.get<std::string>();
  return g;
}

inline Json rules_json(const std::vector<ActionRule>& rules) {
  Json out = Json::array();
  for (const auto& r : rules) {
    Json dist = Json::array();
    for (const auto& [a, p] : r.dist) dist.push_back({{"action", a}, {"prob", p.str()}});
    out.push_back({{"guard", guard_json(r.guard)}, {"dist", dist}});
  }
  return out;
}

inline std::vector<ActionRule> json_rules(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(where + ": expected an array of rules");
  std::vector<ActionRule> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    std::string w = where + "[" + std::to_string(k) + "]";
    ActionRule r;
    r.guard = json_guard(j[k].value("guard", Json::object()), w + ".guard");
    for (const auto& d : field(j[k], "dist", w))
      r.dist.emplace_back(str_field(d, "action", w + ".dist"), json_prob(field(d, "prob", w + ".dist"), w + ".dist"));
    out.push_back(std::move(r));
  }
  return out;
}

inline Json spec_json(const ProtocolSpec& spec) {
  Json j;
  j["format"] = "pps-protocol";
  j["version"] = "1";
  j["agents"] = spec.agents;
  j["horizon"] = spec.horizon;
  Json init = Json::array();
  for (const auto& s : spec.initial) {
    Json locals = Json::object();
    for (const auto& [a, vars] : s.locals) locals[a] = vars_json(vars);
    init.push_back({{"id", s.id}, {"prob", s.prob.str()}, {"env", vars_json(s.env)}, {"locals", locals}});
  }
  j["initial"] = init;
  Json agent_rules = Json::object();
  for (const auto& [a, rules] : spec.agent_rules) agent_rules[a] = rules_json(rules);
  j["agent_rules"] = agent_rules;
  j["env_rules"] = rules_json(spec.env_rules);
  Json trans = Json::array();
  for (const auto& t : spec.transitions) {
    Json assign = Json::array();
    for (const auto& a : t.assign) assign.push_back({{"scope", a.scope}, {"var", a.var}, {"value", value_json(a.value)}});
    trans.push_back({{"guard", guard_json(t.guard)}, {"assign", assign}});
  }
  j["transitions"] = trans;
  return j;
}

inline ProtocolSpec json_spec(const Json& j) {
  ProtocolSpec spec;
  for (const auto& a : field(j, "agents", "model")) spec.agents.push_back(a.get<std::string>());
  spec.horizon = int_field(j, "horizon", "model");
  const Json& init = field(j, "initial", "model");
  for (std::size_t k = 0; k < init.size(); ++k) {
    std::string w = "model.initial[" + std::to_string(k) + "]";
    InitialState s;
    s.id = str_field(init[k], "id", w);
    s.prob = json_prob(field(init[k], "prob", w), w + ".prob");
    s.env = json_vars(init[k].value("env", Json::object()), w + ".env");
    for (const auto& [a, vars] : field(init[k], "locals", w).items()) s.locals[a] = json_vars(vars, w + ".locals." + a);
    spec.initial.push_back(std::move(s));
  }
  if (j.contains("agent_rules"))
    for (const auto& [a, rules] : j.at("agent_rules").items())
      spec.agent_rules[a] = json_rules(rules, "model.agent_rules." + a);
  if (j.contains("env_rules")) spec.env_rules = json_rules(j.at("env_rules"), "model.env_rules");
  if (j.contains("transitions")) {
    const Json& trans = j.at("transitions");
    for (std::size_t k = 0; k < trans.size(); ++k) {
      std::string w = "model.transitions[" + std::to_string(k) + "]";
      TransitionRule t;
      t.guard = json_guard(trans[k].value("guard", Json::object()), w + ".guard");
      for (const auto& a : trans[k].value("assign", Json::array()))
        t.assign.push_back({str_field(a, "scope", w), str_field(a, "var", w), json_value(field(a, "value", w), w)});
      spec.transitions.push_back(std::move(t));
    }
  }
  return spec;
}

}  // namespace detail

inline Json to_json(const PpsTree& tree) { return detail::tree_json(tree); }
inline Json to_json(const ProtocolSpec& spec) { return detail::spec_json(spec); }
inline Json to_json(const Model& m) {
  return std::visit([](const auto& x) { return to_json(x); }, m);
}

/// Canonical text of a model: lexicographic keys, two-space indent, trailing
/// newline.
inline std::string dump_model(const Model& m) { return to_json(m).dump(2) + "\n"; }

/// Parses and validates a model document.
inline Model parse_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(std::string("parse error: ") + e.what());
  }
  std::string format = detail::str_field(j, "format", "model");
  std::string version = detail::str_field(j, "version", "model");
  if (version != "1") throw Error("unsupported model version \"" + version + "\"");
  if (format == "pps-tree") {
    PpsTree tree = detail::json_tree(j);
    ValidationReport rep = validate_tree(tree);
    if (!rep.ok()) throw Error("invalid pps tree:\n" + rep.str());
    return tree;
  }
  if (format == "pps-protocol") {
    ProtocolSpec spec = detail::json_spec(j);
    auto problems = check_spec(spec);
    if (!problems.empty()) {
      std::string msg = "invalid protocol spec:";
      for (const auto& p : problems) msg += "\n  " + p;
      throw Error(msg);
    }
    return spec;
  }
  throw Error("unknown model format \"" + format + "\"");
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << dump_model(m);
  if (!out) throw Error("write failed: " + path);
}

/// The tree a model denotes; protocol tables are expanded.
inline PpsTree tree_of(const Model& m) {
  if (auto t = std::get_if<PpsTree>(&m)) return *t;
  return build_tree(std::get<ProtocolSpec>(m));
}

// reports

inline Json to_json(const Witness& w) {
  Json j;
  j["kind"] = w.kind;
  if (w.run) j["run"] = *w.run;
  if (!w.run_label.empty()) j["run_label"] = w.run_label;
  if (w.time) j["time"] = *w.time;
  if (w.local) j["local"] = {{"agent", w.local->agent}, {"time", w.local->time}, {"vars", detail::vars_json(w.local->vars)}};
  if (!w.nodes.empty()) j["nodes"] = w.nodes;
  if (w.belief) j["belief"] = w.belief->str();
  if (!w.note.empty()) j["note"] = w.note;
  return j;
}

inline Json to_json(const AnalysisReport& rep) {
  Json j;
  j["kind"] = rep.kind;
  j["verdict"] = to_string(rep.verdict);
  Json values = Json::object();
  for (const auto& [k, v] : rep.values) values[k] = v.str();
  j["values"] = values;
  Json ws = Json::array();
  for (const auto& w : rep.witnesses) ws.push_back(to_json(w));
  j["witnesses"] = ws;
  if (!rep.notes.empty()) j["notes"] = rep.notes;
  return j;
}

/// A parsed probabilistic constraint mu(fact@alpha | R(alpha)) >= p.
struct Constraint {
  Fact fact;
  ActionRef action;
  Rational threshold;
};

/// Parses `mu( FACT @ AGENT.ACTION | R(AGENT.ACTION) ) >= NUM/DEN`.
inline Constraint parse_constraint(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  auto bad = [&](const std::string& why) { return Error("malformed constraint: " + why); };
  if (s.rfind("mu(", 0) != 0) throw bad("expected \"mu(\"");
  auto ge = s.rfind(">=");
  if (ge == std::string::npos) throw bad("expected \">= NUM/DEN\"");
  std::string body = s.substr(0, ge);
  if (body.back() != ')') throw bad("expected \")\" before \">=\"");
  body = body.substr(3, body.size() - 4);
  auto bar = body.rfind('|');
  if (bar == std::string::npos) throw bad("expected \"| R(AGENT.ACTION)\"");
  std::string cond = body.substr(bar + 1);
  if (cond.rfind("R(", 0) != 0 || cond.back() != ')') throw bad("expected \"R(AGENT.ACTION)\" after \"|\"");
  ActionRef given = ActionRef::parse(cond.substr(2, cond.size() - 3));
  std::string lhs = body.substr(0, bar);
  auto at = lhs.rfind('@');
  if (at == std::string::npos) throw bad("expected \"FACT @ AGENT.ACTION\"");
  ActionRef action = ActionRef::parse(lhs.substr(at + 1));
  if (!(action == given)) throw bad("action " + action.str() + " differs from conditioning action " + given.str());
  // Re-parse the fact from the original text so error positions stay meaningful.
  auto raw_at = text.rfind('@');
  auto raw_open = text.find('(');
  Fact fact = parse_fact(text.substr(raw_open + 1, raw_at - raw_open - 1));
  return {std::move(fact), std::move(action), Rational::parse(s.substr(ge + 2))};
}

}  // namespace pak
