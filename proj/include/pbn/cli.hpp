#pragma once

// Command-line front end. run() never throws; errors map to exit codes
// (1 usage/syntax, 2 semantic, 3 impossible evidence, 4 resource).

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"

#include "pbn/bayesnet.hpp"
#include "pbn/bracket.hpp"
#include "pbn/ci_lab.hpp"
#include "pbn/elvira_io.hpp"
#include "pbn/error.hpp"
#include "pbn/factor.hpp"
#include "pbn/inference.hpp"

namespace pbn::cli {

/// Locale-free fixed-point rendering; values that round to zero print unsigned.
inline std::string format_number(double x, int precision) {
  if (std::abs(x) < 0.5 * std::pow(10.0, -precision)) x = 0.0;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

enum class Format { table, tsv };

/// Long form: one row per assignment, variables in scope order, then the value.
inline void print_table(std::ostream& out, const Factor& f, const std::string& value_label, int precision,
                        Format fmt) {
  const auto names = f.variable_names();
  if (fmt == Format::tsv) {
    // Header of the last variable's state labels; one row per assignment of the rest.
    if (names.empty()) {
      out << format_number(f[0], precision) << "\n";
      return;
    }
    const Variable& last = f.scope().back();
    for (std::size_t i = 0; i + 1 < names.size(); ++i) out << names[i] << "\t";
    for (std::size_t k = 0; k < last.cardinality(); ++k) out << (k ? "\t" : "") << last.states()[k];
    out << "\n";
    for (std::size_t row = 0; row < f.size(); row += last.cardinality()) {
      const Assignment a = f.assignment_of(row);
      for (std::size_t i = 0; i + 1 < names.size(); ++i) out << a.at(names[i]) << "\t";
      for (std::size_t k = 0; k < last.cardinality(); ++k)
        out << (k ? "\t" : "") << format_number(f[row + k], precision);
      out << "\n";
    }
    return;
  }
  std::vector<std::size_t> width;
  for (const auto& v : f.scope()) {
    std::size_t w = v.name().size();
    for (const auto& s : v.states()) w = std::max(w, s.size());
    width.push_back(w);
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size() + 2, ' '); };
  for (std::size_t i = 0; i < names.size(); ++i) out << pad(names[i], width[i]);
  out << value_label << "\n";
  for (std::size_t lin = 0; lin < f.size(); ++lin) {
    const Assignment a = f.assignment_of(lin);
    for (std::size_t i = 0; i < names.size(); ++i) out << pad(a.at(names[i]), width[i]);
    out << format_number(f[lin], precision) << "\n";
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::syntax, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline BayesianNetwork builtin_network(const std::string& name) {
  if (name == "student") return student_network();
  if (name == "intelligence-sat") return intelligence_sat_network();
  throw Error(ErrorCategory::syntax, "unknown builtin network '" + name + "' (try 'student')");
}

inline BayesianNetwork load_network(const std::string& path, std::ostream& err) {
  std::vector<std::string> warnings;
  const std::string text = read_file(path);
  const bool native = path.ends_with(".json");
  BayesianNetwork net = native ? parse_native(text, &warnings) : parse_network(text, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return net;
}

/// `F:VAR=v0,v1,...` — a numeric observable on one variable, one value per state.
inline StateFunction parse_function_spec(const std::string& spec, const BayesianNetwork& net) {
  const auto colon = spec.find(':');
  const auto eq = spec.find('=', colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || eq == std::string::npos)
    throw SyntaxError("function spec must look like F:VAR=v0,v1,... (got '" + spec + "')", 0);
  const std::string name = spec.substr(0, colon), var = spec.substr(colon + 1, eq - colon - 1);
  std::vector<double> values;
  std::string_view rest = std::string_view(spec).substr(eq + 1);
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw SyntaxError("bad number '" + std::string(item) + "' in function spec", 0);
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (!is_identifier(name)) throw SyntaxError("bad function name '" + name + "'", 0);
  const Variable& v = net.variable(var);
  if (values.size() != v.cardinality())
    throw SemanticError("function '" + name + "' needs " + std::to_string(v.cardinality()) + " values for '" +
                        var + "'");
  return StateFunction::of_states(name, v, std::move(values));
}

/// Accepts "X, Y | Z", "X _|_ Y | Z" and braced sets such as "{A, B} _|_ C | {D, E}".
inline CIStatement parse_ci_statement(std::string_view text) {
  std::vector<std::string> toks;
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (c == ' ' || c == '\t') { ++i; continue; }
    if (text.substr(i, 3) == "_|_") { toks.push_back("_|_"); i += 3; continue; }
    if (c == '{' || c == '}' || c == ',' || c == '|') { toks.emplace_back(1, c); ++i; continue; }
    std::size_t j = i;
    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_') &&
           text.substr(j, 3) != "_|_")
      ++j;
    if (j == i) throw SyntaxError(std::string("unexpected character '") + c + "' in statement", i);
    toks.emplace_back(text.substr(i, j - i));
    i = j;
  }
  std::size_t pos = 0;
  auto at = [&](const char* t) { return pos < toks.size() && toks[pos] == t; };
  auto name = [&]() {
    if (pos >= toks.size() || !is_identifier(toks[pos])) throw SyntaxError("expected a variable name", pos);
    return toks[pos++];
  };
  auto set = [&]() {
    std::vector<std::string> out;
    if (!at("{")) return std::vector<std::string>{name()};
    ++pos;
    out.push_back(name());
    while (at(",")) { ++pos; out.push_back(name()); }
    if (!at("}")) throw SyntaxError("expected '}'", pos);
    ++pos;
    return out;
  };
  auto left = set();
  if (!at("_|_") && !at(",")) throw SyntaxError("expected '_|_' or ',' after the left set", pos);
  ++pos;
  auto right = set();
  std::vector<std::string> given;
  if (at("|")) {
    ++pos;
    if (at("{")) {
      given = set();
    } else {
      given.push_back(name());
      while (at(",")) { ++pos; given.push_back(name()); }
    }
  }
  if (pos != toks.size()) throw SyntaxError("unexpected trailing input in statement", pos);
  return CIStatement(std::move(left), std::move(right), std::move(given));
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete Bayesian networks and probability-bracket queries", "pbn"};
  app.require_subcommand(1);

  std::string builtin;
  std::vector<std::string> args;
  auto add_source = [&](CLI::App* sub) {
    sub->add_option("--builtin", builtin, "Use a built-in network (student)");
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check acyclicity, CPT scopes and row sums");
  add_source(validate_cmd);
  validate_cmd->add_option("args", args, "FILE");

  std::string method = "ve", format = "table";
  bool force = false;
  int precision = 4;
  std::vector<std::string> function_specs;
  auto* query_cmd = app.add_subcommand("query", "Evaluate a bracket expression");
  add_source(query_cmd);
  query_cmd->add_option("args", args, "[FILE] EXPR");
  query_cmd->add_option("--method", method, "enum or ve")->check(CLI::IsMember({"enum", "ve"}));
  query_cmd->add_flag("--force", force, "Evaluate invalid or meaningless brackets and report the class");
  query_cmd->add_option("--function", function_specs, "Operator/observable F:VAR=v0,v1,...");

  auto* joint_cmd = app.add_subcommand("joint", "Print the full joint distribution");
  add_source(joint_cmd);
  joint_cmd->add_option("args", args, "FILE");

  for (auto* sub : {query_cmd, joint_cmd}) {
    sub->add_option("--precision", precision, "Decimal places")->check(CLI::Range(0, 17));
    sub->add_option("--format", format, "table or tsv")->check(CLI::IsMember({"table", "tsv"}));
  }

  double tol = kDefaultCITolerance;
  auto* indep_cmd = app.add_subcommand("independencies", "List and verify local independencies");
  add_source(indep_cmd);
  indep_cmd->add_option("args", args, "FILE");
  indep_cmd->add_option("--tol", tol, "Numeric tolerance");

  auto* ci_cmd = app.add_subcommand("ci-check", "Test a conditional independence statement");
  add_source(ci_cmd);
  ci_cmd->add_option("args", args, "[FILE] \"X, Y | Z\"");
  ci_cmd->add_option("--tol", tol, "Numeric tolerance");

  AxiomTrialConfig axiom_cfg;
  axiom_cfg.positive = false;
  auto* axioms_cmd = app.add_subcommand("axioms", "Property-test the semigraphoid axioms");
  axioms_cmd->add_option("--vars", axiom_cfg.num_vars, "Number of variables")->check(CLI::Range(2, 16));
  axioms_cmd->add_option("--card", axiom_cfg.cardinality, "States per variable")->check(CLI::Range(1, 16));
  axioms_cmd->add_option("--trials", axiom_cfg.trials, "Number of trials");
  axioms_cmd->add_option("--seed", axiom_cfg.seed, "RNG seed");
  axioms_cmd->add_flag("--positive", axiom_cfg.positive, "Strictly positive distributions only");
  axioms_cmd->add_option("--tol", axiom_cfg.tol, "Numeric tolerance");

  std::string target;
  auto* convert_cmd = app.add_subcommand("convert", "Convert between elvira and native formats");
  add_source(convert_cmd);
  convert_cmd->add_option("args", args, "[FILE] OUT ('-' for stdout)");
  convert_cmd->add_option("--to", target, "elvira or native")->required()->check(CLI::IsMember({"elvira", "native"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  // Positionals after the source (if it is a file).
  auto source_and_rest = [&](std::size_t want_rest, std::ostream& diag) {
    const std::size_t want = want_rest + (builtin.empty() ? 1 : 0);
    if (args.size() != want)
      throw Error(ErrorCategory::syntax, "expected " + std::to_string(want) + " positional argument(s), got " +
                                             std::to_string(args.size()) +
                                             (builtin.empty() ? " (give FILE or --builtin NAME)" : ""));
    BayesianNetwork net = builtin.empty() ? load_network(args.front(), diag) : builtin_network(builtin);
    return std::make_pair(std::move(net),
                          std::vector<std::string>(args.end() - static_cast<std::ptrdiff_t>(want_rest), args.end()));
  };
  const Format fmt = format == "tsv" ? Format::tsv : Format::table;

  try {
    if (validate_cmd->parsed()) {
      try {
        auto [net, rest] = source_and_rest(0, err);
        const auto report = validate_network(net);
        out << report.summary() << "\n";
        return report.valid() ? 0 : 2;
      } catch (const ValidationError& e) {
        out << e.report().summary() << "\n";
        return 2;
      }
    }

    if (query_cmd->parsed()) {
      auto [net, rest] = source_and_rest(1, err);
      EvaluationOptions opt;
      opt.method = method == "enum" ? Method::enumeration : Method::variable_elimination;
      opt.force = force;
      for (const auto& spec : function_specs) {
        StateFunction f = parse_function_spec(spec, net);
        opt.functions.insert_or_assign(f.name(), std::move(f));
      }
      const BracketExpression expr = parse_query(rest[0]);
      const QueryResult r = evaluate(expr, net, opt);
      if (r.is_scalar()) {
        out << format_number(r.scalar(), precision) << "\n";
      } else {
        print_table(out, r.table(), to_string(expr), precision, fmt);
      }
      if (force) {
        out << "validity: " << validity_name(r.validity.validity);
        if (!r.validity.reason.empty()) out << " (" << r.validity.reason << ")";
        out << "\n";
      }
      return 0;
    }

    if (joint_cmd->parsed()) {
      auto [net, rest] = source_and_rest(0, err);
      print_table(out, reorder(joint_distribution(net), net.names()), "P", precision, fmt);
      return 0;
    }

    if (indep_cmd->parsed()) {
      auto [net, rest] = source_and_rest(0, err);
      const auto reports = verify_local_independencies(net, tol);
      std::size_t failed = 0;
      for (const auto& r : reports) {
        out << r.statement.to_string() << "\t" << (r.holds ? "holds" : "FAILS") << "\tmax_deviation="
            << r.max_deviation << "\n";
        if (!r.holds) ++failed;
      }
      out << reports.size() - failed << " of " << reports.size() << " statements hold\n";
      return failed ? 2 : 0;
    }

    if (ci_cmd->parsed()) {
      auto [net, rest] = source_and_rest(1, err);
      const CIStatement stmt = parse_ci_statement(rest[0]);
      const CIReport r = check_variable_ci(joint_distribution(net), stmt, tol);
      out << "statement\t" << r.statement.to_string() << "\n";
      out << "holds\t" << (r.holds ? "true" : "false") << "\n";
      out << "max_deviation\t" << r.max_deviation << "\n";
      out << "tolerance\t" << r.tolerance << "\n";
      if (!r.holds) {
        out << "witness\t";
        bool first = true;
        for (const auto& [k, v] : r.witness) { out << (first ? "" : ", ") << k << "=" << v; first = false; }
        out << "\n";
      }
      return 0;
    }

    if (axioms_cmd->parsed()) {
      const AxiomTrialSummary s = run_axiom_trials(axiom_cfg);
      out << "distributions\t" << s.distributions << "\tpositive=" << (axiom_cfg.positive ? "yes" : "no")
          << "\tseed=" << axiom_cfg.seed << "\n";
      out << "axiom\tnon_vacuous\tvacuous\tviolations\tpositivity_counterexamples\n";
      for (Axiom a : kAllAxioms) {
        const AxiomTally& t = s[a];
        out << axiom_name(a) << "\t" << t.non_vacuous << "\t" << t.vacuous << "\t" << t.violations << "\t"
            << t.positivity_counterexamples << "\n";
      }
      return s.total_violations() ? 2 : 0;
    }

    if (convert_cmd->parsed()) {
      auto [net, rest] = source_and_rest(1, err);
      const std::string text = target == "elvira" ? write_elvira(net) : write_native(net);
      if (rest[0] == "-") {
        out << text;
      } else {
        std::ofstream f(rest[0], std::ios::binary);
        if (!f || !(f << text)) throw Error(ErrorCategory::syntax, "cannot write '" + rest[0] + "'");
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return exit_code(ErrorCategory::resource);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace pbn::cli
