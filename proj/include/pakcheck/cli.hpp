#pragma once

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pakcheck/pakcheck.hpp"

namespace pak {

enum ExitCode { kExitHolds = 0, kExitFails = 1, kExitUsage = 2, kExitNotApplicable = 3 };

inline int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Holds: return kExitHolds;
    case Verdict::Fails: return kExitFails;
    case Verdict::NotApplicable: return kExitNotApplicable;
  }
  return kExitUsage;
}

namespace detail {

inline std::string show(const Rational& q) {
  if (q.denominator() == 1) return q.str();
  return q.str() + " (≈ " + q.approx() + ")";
}

inline void print_report(std::ostream& out, const AnalysisReport& rep, bool json) {
  if (json) {
    out << to_json(rep).dump(2) << "\n";
    return;
  }
  out << rep.kind << ": " << to_string(rep.verdict) << "\n";
  for (const auto& [k, v] : rep.values) out << "  " << k << " = " << show(v) << "\n";
  for (const auto& n : rep.notes) out << "  note: " << n << "\n";
  for (const auto& w : rep.witnesses) {
    out << "  witness (" << w.kind << ")";
    if (!w.run_label.empty()) out << " run " << w.run_label;
    if (w.time) out << " t=" << *w.time;
    if (!w.nodes.empty()) {
      out << " nodes";
      for (const auto& n : w.nodes) out << " " << n;
    }
    if (w.belief) out << " belief " << show(*w.belief);
    if (!w.note.empty()) out << " [" << w.note << "]";
    out << "\n";
  }
}

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"fs", "fs-refrain", "fig1"};
  return names;
}

inline Model builtin_model(const std::string& name) {
  if (name == "fs") return builtin_fs();
  if (name == "fs-refrain") return builtin_fs_refrain();
  if (name == "fig1") return builtin_fig1();
  throw Error("unknown builtin \"" + name + "\" (expected fs, fs-refrain or fig1)");
}

inline Model resolve_model(const std::string& spec) {
  if (spec.rfind("builtin:", 0) == 0) return builtin_model(spec.substr(8));
  return load_model(spec);
}

}  // namespace detail

/// Entry point of the pakcheck command. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Exact model checker for probabilistic constraints and beliefs in purely probabilistic systems",
               "pakcheck"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  std::string model, fact_text, action_text, p_text, delta_text, eps_text, constraint_text, out_path, theorem;
  int run_index = -1, time = -1;
  std::string agent_name;

  auto model_opt = [&](CLI::App* sub) {
    sub->add_option("--model", model, "Model file or builtin:NAME")->required();
  };
  auto fact_action = [&](CLI::App* sub) {
    sub->add_option("--fact", fact_text, "Fact expression")->required();
    sub->add_option("--action", action_text, "AGENT.ACTION")->required();
  };

  auto* validate = app.add_subcommand("validate", "Check that a model is a well-formed pps");
  model_opt(validate);
  auto* runs = app.add_subcommand("runs", "List runs and their measures");
  model_opt(runs);
  auto* belief = app.add_subcommand("belief", "Beliefs of the acting agent, or at one point");
  model_opt(belief);
  belief->add_option("--fact", fact_text, "Fact expression")->required();
  belief->add_option("--action", action_text, "AGENT.ACTION; profile beliefs at this action");
  belief->add_option("--agent", agent_name, "Agent whose belief is evaluated at --run/--time");
  belief->add_option("--run", run_index, "Run index (see `runs`)");
  belief->add_option("--time", time, "Time of the point");
  auto* check = app.add_subcommand("check", "Check a probabilistic constraint");
  model_opt(check);
  check->add_option("--constraint", constraint_text, "mu(FACT @ A.x | R(A.x)) >= NUM/DEN");
  check->add_option("--fact", fact_text, "Fact expression");
  check->add_option("--action", action_text, "AGENT.ACTION");
  check->add_option("--p", p_text, "Threshold NUM/DEN");
  auto* independence = app.add_subcommand("independence", "Check local-state independence");
  model_opt(independence);
  fact_action(independence);
  auto* verify = app.add_subcommand("verify", "Verify the sufficiency, expectation or sometimes theorem");
  model_opt(verify);
  fact_action(verify);
  theorem = "expectation";
  verify->add_option("--theorem", theorem, "expectation, sufficiency or sometimes")
      ->check(CLI::IsMember({"expectation", "sufficiency", "sometimes"}));
  verify->add_option("--p", p_text, "Threshold NUM/DEN (sufficiency, sometimes)");
  auto* pak_cmd = app.add_subcommand("pak", "Verify the probably-approximately-known bound");
  model_opt(pak_cmd);
  fact_action(pak_cmd);
  pak_cmd->add_option("--delta", delta_text, "delta NUM/DEN")->required();
  pak_cmd->add_option("--eps", eps_text, "eps NUM/DEN")->required();
  auto* counter = app.add_subcommand("counterexample", "Emit the three-run threshold counterexample");
  counter->add_option("--p", p_text, "p NUM/DEN")->required();
  counter->add_option("--eps", eps_text, "eps NUM/DEN")->required();
  counter->add_option("--out", out_path, "Output file (default stdout)");
  auto* builtin = app.add_subcommand("builtin", "List or emit builtin models");
  std::string builtin_action, builtin_name;
  builtin->add_option("command", builtin_action, "list or emit")->required()->check(CLI::IsMember({"list", "emit"}));
  builtin->add_option("name", builtin_name, "Builtin name for emit");
  builtin->add_option("--out", out_path, "Output file (default stdout)");
  auto* suite = app.add_subcommand("suite", "Run the random property suite");
  std::uint64_t seed = 1;
  int cases = 200;
  suite->add_option("--seed", seed, "First seed (PAKCHECK_SEED overrides)");
  suite->add_option("--cases", cases, "Number of random trees")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitHolds;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitHolds;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const bool json = format == "json";
  try {
    auto write_model = [&](const Model& m) {
      if (out_path.empty())
        out << dump_model(m);
      else
        save_model(m, out_path);
    };

    if (*builtin) {
      if (builtin_action == "list") {
        for (const auto& n : detail::builtin_names()) out << n << "\n";
        return kExitHolds;
      }
      if (builtin_name.empty()) throw Error("builtin emit requires a name");
      write_model(detail::builtin_model(builtin_name));
      return kExitHolds;
    }
    if (*counter) {
      write_model(build_counterexample(Rational::parse(p_text), Rational::parse(eps_text)));
      return kExitHolds;
    }
    if (*suite) {
      if (const char* env = std::getenv("PAKCHECK_SEED")) seed = std::stoull(env);
      SuiteParams sp;
      sp.first_seed = seed;
      sp.cases = cases;
      SuiteResult res = run_suite(sp);
      if (json) {
        Json j;
        j["trees"] = res.trees;
        j["pairs"] = res.pairs;
        j["verdict"] = res.ok() ? "holds" : "fails";
        for (const auto& [name, t] : res.properties)
          j["properties"][name] = {{"checked", t.checked}, {"applicable", t.applicable}, {"violations", t.violations},
                                   {"examples", t.examples}};
        out << j.dump(2) << "\n";
      } else {
        out << "suite: seeds " << seed << ".." << seed + static_cast<std::uint64_t>(cases) - 1 << ", " << res.trees
            << " trees, " << res.pairs << " fact/action pairs\n";
        for (const auto& [name, t] : res.properties) {
          out << "  " << std::left << std::setw(28) << name << " checked " << t.checked << ", hypotheses met "
              << t.applicable << ", violations " << t.violations << "\n";
          for (const auto& e : t.examples) out << "    " << e << "\n";
        }
        out << (res.ok() ? "holds" : "fails") << "\n";
      }
      return res.ok() ? kExitHolds : kExitFails;
    }

    Model m = detail::resolve_model(model);
    if (*validate) {
      // loading already validated trees and spec tables; protocols are also expanded
      PpsTree tree = tree_of(m);
      ValidationReport rep = validate_tree(tree);
      if (json) {
        out << Json{{"kind", "validate"}, {"verdict", rep.ok() ? "holds" : "fails"}, {"violations", rep.violations}}
                   .dump(2)
            << "\n";
      } else {
        out << (rep.ok() ? "valid" : rep.str()) << "\n";
      }
      return rep.ok() ? kExitHolds : kExitFails;
    }

    System sys(tree_of(m));
    if (*runs) {
      if (json) {
        Json list = Json::array();
        for (std::size_t r = 0; r < sys.run_count(); ++r)
          list.push_back({{"index", r}, {"run", sys.run_label(r)}, {"measure", sys.run_measure(r).str()}});
        out << Json{{"kind", "runs"}, {"runs", list}, {"total", sys.measure(sys.all()).str()}}.dump(2) << "\n";
      } else {
        for (std::size_t r = 0; r < sys.run_count(); ++r)
          out << r << "  " << sys.run_label(r) << "  " << detail::show(sys.run_measure(r)) << "\n";
        out << "total " << detail::show(sys.measure(sys.all())) << "\n";
      }
      return kExitHolds;
    }

    Fact fact;
    if (!fact_text.empty()) {
      fact = parse_fact(fact_text);
      bind(sys.tree(), fact);
    }

    if (*belief) {
      if (!action_text.empty()) {
        BeliefProfile prof = belief_profile(sys, fact, ActionRef::parse(action_text));
        if (json) {
          Json states = Json::array();
          for (const auto& e : prof.per_state)
            states.push_back({{"time", e.local.time}, {"vars", detail::vars_json(e.local.vars)}, {"belief", e.belief.str()}});
          Json per_run = Json::object();
          for (std::size_t r = 0; r < prof.per_run.size(); ++r) per_run[sys.run_label(r)] = prof.per_run[r].str();
          out << Json{{"kind", "belief"}, {"action", prof.action.str()}, {"fact", render(prof.fact)}, {"states", states},
                      {"runs", per_run}}
                     .dump(2)
              << "\n";
        } else {
          out << "belief of " << prof.action.agent << " in " << render(prof.fact) << " when performing "
              << prof.action.str() << "\n";
          for (const auto& e : prof.per_state) {
            out << "  state t=" << e.local.time;
            for (const auto& [k, v] : e.local.vars) out << " " << k << "=" << to_string(v);
            out << ": " << detail::show(e.belief) << "\n";
          }
        }
        return kExitHolds;
      }
      if (agent_name.empty() || run_index < 0 || time < 0)
        throw Error("belief requires --action, or --agent with --run and --time");
      Rational b = belief_at(sys, agent_name, fact, static_cast<std::size_t>(run_index), time);
      if (json)
        out << Json{{"kind", "belief"}, {"agent", agent_name}, {"run", run_index}, {"time", time}, {"belief", b.str()}}
                   .dump(2)
            << "\n";
      else
        out << "belief " << detail::show(b) << "\n";
      return kExitHolds;
    }

    AnalysisReport rep;
    if (*check) {
      Constraint c;
      if (!constraint_text.empty()) {
        c = parse_constraint(constraint_text);
        bind(sys.tree(), c.fact);
      } else {
        if (fact_text.empty() || action_text.empty() || p_text.empty())
          throw Error("check requires --constraint, or --fact, --action and --p");
        c = {fact, ActionRef::parse(action_text), Rational::parse(p_text)};
      }
      rep = check_constraint(sys, c.fact, c.action, c.threshold);
    } else if (*independence) {
      rep = check_local_state_independence(sys, fact, ActionRef::parse(action_text));
    } else if (*verify) {
      ActionRef a = ActionRef::parse(action_text);
      if (theorem == "expectation") {
        rep = verify_expectation(sys, fact, a);
      } else {
        if (p_text.empty()) throw Error("--theorem " + theorem + " requires --p");
        Rational p = Rational::parse(p_text);
        rep = theorem == "sufficiency" ? verify_sufficiency(sys, fact, a, p) : verify_sometimes(sys, fact, a, p);
      }
    } else if (*pak_cmd) {
      rep = verify_pak(sys, fact, ActionRef::parse(action_text), Rational::parse(delta_text), Rational::parse(eps_text));
    }
    detail::print_report(out, rep, json);
    return exit_code(rep.verdict);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace pak
