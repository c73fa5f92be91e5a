#pragma once

// Probability-bracket queries.
//
//   query    := prob | expect
//   prob     := "P(" targets (("|" insertion)* "|" ketexpr)? ")"
//   expect   := "E[" funcname ("|" ketexpr)? "]"
//   targets  := term ("," term)*
//   term     := NAME ("=" NAME)?
//   insertion:= "[" NAME ("," NAME)* "]"
//   ketexpr  := "Omega" | evlist | opket
//   evlist   := ev ("," ev)*
//   ev       := NAME "=" NAME | NAME "in" "{" NAME ("," NAME)* "}"
//   opket    := NAME "|" ev
//
// `[V]` is the unit operator I_V = sum_v |v)P(v|. Inserting it rewrites
// P(A | B) as sum_v P(A | v) P(v | B).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pbn/bayesnet.hpp"
#include "pbn/error.hpp"
#include "pbn/factor.hpp"
#include "pbn/inference.hpp"

namespace pbn {

enum class BracketKind { probability, expectation, operator_bracket };

struct TargetTerm {
  std::string variable;
  std::optional<std::string> state;  // nullopt = free
  friend bool operator==(const TargetTerm&, const TargetTerm&) = default;
};

struct BracketExpression {
  BracketKind kind = BracketKind::probability;
  std::vector<TargetTerm> targets;                  // probability / operator brackets
  std::string function;                             // expectation: the function name
  std::vector<std::vector<std::string>> insertions; // unit operators, left to right
  std::string op;                                   // opket operator name, empty if none
  bool ket_omega = false;                           // the ket was written as Omega
  std::vector<EventSet> evidence;                   // empty = whole sample space

  bool has_ket() const { return ket_omega || !evidence.empty(); }
  bool ket_is_omega() const { return op.empty() && evidence.empty(); }
  bool fully_bound() const {
    return std::all_of(targets.begin(), targets.end(), [](const auto& t) { return t.state.has_value(); });
  }
  std::vector<std::string> target_names() const {
    std::vector<std::string> out;
    for (const auto& t : targets) out.push_back(t.variable);
    return out;
  }
  friend bool operator==(const BracketExpression&, const BracketExpression&) = default;
};

namespace detail {

enum class Tok { name, lparen, rparen, lbracket, rbracket, lbrace, rbrace, bar, comma, equals, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

inline std::vector<Token> lex_query(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto ident_start = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto ident_char = [&](char c) { return ident_start(c) || (c >= '0' && c <= '9'); };
  while (i < s.size()) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') { ++i; continue; }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.push_back({Tok::name, std::string(s.substr(i, j - i)), i});
      i = j;
      continue;
    }
    Tok k;
    switch (c) {
      case '(': k = Tok::lparen; break;
      case ')': k = Tok::rparen; break;
      case '[': k = Tok::lbracket; break;
      case ']': k = Tok::rbracket; break;
      case '{': k = Tok::lbrace; break;
      case '}': k = Tok::rbrace; break;
      case '|': k = Tok::bar; break;
      case ',': k = Tok::comma; break;
      case '=': k = Tok::equals; break;
      default: throw SyntaxError(std::string("unexpected character '") + c + "'", i);
    }
    out.push_back({k, std::string(1, c), i});
    ++i;
  }
  out.push_back({Tok::end, "", s.size()});
  return out;
}

class QueryParser {
 public:
  explicit QueryParser(std::string_view text) : toks_(lex_query(text)) {}

  BracketExpression parse() {
    BracketExpression e;
    const Token head = expect(Tok::name, "'P(' or 'E['");
    if (head.text == "P") {
      expect(Tok::lparen, "'('");
      parse_targets(e);
      if (accept(Tok::bar)) {
        while (peek().kind == Tok::lbracket) {
          e.insertions.push_back(parse_insertion());
          expect(Tok::bar, "'|' after unit operator");
        }
        parse_ket(e);
      }
      expect(Tok::rparen, "')'");
      e.kind = e.op.empty() ? BracketKind::probability : BracketKind::operator_bracket;
    } else if (head.text == "E") {
      expect(Tok::lbracket, "'['");
      e.kind = BracketKind::expectation;
      e.function = expect(Tok::name, "function name").text;
      if (accept(Tok::bar)) parse_ket(e);
      expect(Tok::rbracket, "']'");
    } else {
      throw SyntaxError("query must start with 'P(' or 'E['", head.offset);
    }
    if (peek().kind != Tok::end) throw SyntaxError("unexpected trailing input", peek().offset);
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }

  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }

  Token expect(Tok k, const char* what) {
    if (peek().kind != k) {
      const auto& t = peek();
      throw SyntaxError(std::string("expected ") + what + ", found " +
                            (t.kind == Tok::end ? std::string("end of input") : "'" + t.text + "'"),
                        t.offset);
    }
    return toks_[pos_++];
  }

  void parse_targets(BracketExpression& e) {
    std::optional<bool> bound;
    do {
      const Token name = expect(Tok::name, "variable name");
      TargetTerm t{name.text, std::nullopt};
      if (accept(Tok::equals)) t.state = expect(Tok::name, "state name").text;
      if (bound && *bound != t.state.has_value())
        throw SyntaxError("targets must be all bound (X=x) or all free (X)", name.offset);
      bound = t.state.has_value();
      note(bra_, name.text, name.offset);
      e.targets.push_back(std::move(t));
    } while (accept(Tok::comma));
  }

  std::vector<std::string> parse_insertion() {
    expect(Tok::lbracket, "'['");
    std::vector<std::string> vars;
    std::set<std::string> seen;
    do {
      const Token name = expect(Tok::name, "variable name");
      if (!seen.insert(name.text).second) throw DuplicateVariableError(name.text, name.offset);
      vars.push_back(name.text);
    } while (accept(Tok::comma));
    expect(Tok::rbracket, "']'");
    return vars;
  }

  void parse_ket(BracketExpression& e) {
    const Token& first = peek();
    if (first.kind == Tok::name && first.text == "Omega" &&
        (peek(1).kind == Tok::rparen || peek(1).kind == Tok::rbracket)) {
      ++pos_;
      e.ket_omega = true;
      return;
    }
    if (first.kind == Tok::name && peek(1).kind == Tok::bar) {
      e.op = first.text;
      pos_ += 2;
      e.evidence.push_back(parse_ev());
      return;
    }
    do e.evidence.push_back(parse_ev());
    while (accept(Tok::comma));
  }

  EventSet parse_ev() {
    const Token name = expect(Tok::name, "evidence variable");
    note(ket_, name.text, name.offset);
    if (accept(Tok::equals)) return EventSet::point(name.text, expect(Tok::name, "state name").text);
    const Token kw = expect(Tok::name, "'=' or 'in'");
    if (kw.text != "in") throw SyntaxError("expected '=' or 'in'", kw.offset);
    expect(Tok::lbrace, "'{'");
    std::vector<std::string> states;
    do {
      const Token s = expect(Tok::name, "state name");
      if (std::find(states.begin(), states.end(), s.text) != states.end())
        throw SyntaxError("duplicate state '" + s.text + "'", s.offset);
      states.push_back(s.text);
    } while (accept(Tok::comma));
    expect(Tok::rbrace, "'}'");
    return EventSet(name.text, std::move(states));
  }

  static void note(std::set<std::string>& seen, const std::string& var, std::size_t offset) {
    if (!seen.insert(var).second) throw DuplicateVariableError(var, offset);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  // A variable may appear once in the bra and once in the ket, as in P(x | x').
  std::set<std::string> bra_, ket_;
};

}  // namespace detail

inline BracketExpression parse_query(std::string_view text) {
  return detail::QueryParser(text).parse();
}

inline std::string to_string(const EventSet& ev) {
  if (ev.is_point()) return ev.variable() + "=" + ev.states().front();
  std::string s = ev.variable() + " in {";
  for (std::size_t i = 0; i < ev.states().size(); ++i) s += (i ? ", " : "") + ev.states()[i];
  return s + "}";
}

/// Canonical text; parse_query(to_string(e)) == e.
inline std::string to_string(const BracketExpression& e) {
  auto join = [](const auto& items, auto&& render) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + render(items[i]);
    return s;
  };
  auto ket = [&]() {
    if (e.ket_omega) return std::string("Omega");
    std::string evs = join(e.evidence, [](const EventSet& ev) { return to_string(ev); });
    return e.op.empty() ? evs : e.op + " | " + evs;
  };
  if (e.kind == BracketKind::expectation) {
    std::string s = "E[" + e.function;
    if (e.has_ket()) s += " | " + ket();
    return s + "]";
  }
  std::string s = "P(" + join(e.targets, [](const TargetTerm& t) {
    return t.state ? t.variable + "=" + *t.state : t.variable;
  });
  for (const auto& ins : e.insertions) s += " | [" + join(ins, [](const std::string& n) { return n; }) + "]";
  if (e.has_ket()) s += " | " + ket();
  return s + ")";
}

/// Named real functions available to E[F] and operator brackets.
using FunctionTable = std::map<std::string, StateFunction>;

enum class Validity { well_formed, invalid_insertion, meaningless };

inline const char* validity_name(Validity v) {
  switch (v) {
    case Validity::well_formed: return "well-formed";
    case Validity::invalid_insertion: return "invalid-insertion";
    case Validity::meaningless: return "meaningless";
  }
  return "?";
}

struct ValidityReport {
  Validity validity = Validity::well_formed;
  std::string reason;
  bool ok() const noexcept { return validity == Validity::well_formed; }
};

class InvalidExpressionError : public SemanticError {
 public:
  explicit InvalidExpressionError(ValidityReport report)
      : SemanticError(std::string(validity_name(report.validity)) + " expression: " + report.reason),
        report_(std::move(report)) {}
  const ValidityReport& report() const noexcept { return report_; }

 private:
  ValidityReport report_;
};

/// Agreement required between an insertion rewrite and the direct value.
inline constexpr double kInsertionTolerance = 1e-9;

struct EvaluationOptions {
  Method method = Method::variable_elimination;
  bool force = false;  // evaluate invalid/meaningless brackets anyway
  FunctionTable functions;
};

struct QueryResult {
  std::variant<double, Factor> value;
  ValidityReport validity;

  bool is_scalar() const { return std::holds_alternative<double>(value); }
  double scalar() const { return std::get<double>(value); }
  const Factor& table() const { return std::get<Factor>(value); }
};

namespace detail {

inline Factor posterior(const BayesianNetwork& net, const std::vector<EventSet>& evidence,
                        const std::vector<std::string>& targets, Method method) {
  return method == Method::enumeration ? enumerate_posterior(net, evidence, targets)
                                       : eliminate_posterior(net, evidence, targets, std::nullopt);
}

/// Variables of the operator named `op`: a table function, else the network
/// variable of that name.
inline std::vector<std::string> operator_variables(const BayesianNetwork& net, const std::string& op,
                                                   const FunctionTable& fns) {
  if (auto it = fns.find(op); it != fns.end()) return it->second.variable_names();
  if (net.has_variable(op)) return {op};
  throw NameError("unknown operator '" + op + "'");
}

inline const StateFunction& operator_function(const std::string& op, const FunctionTable& fns) {
  if (auto it = fns.find(op); it != fns.end()) return it->second;
  throw NameError("operator '" + op + "' needs numeric state values; supply a function named '" + op + "'");
}

inline void check_function(const BayesianNetwork& net, const StateFunction& f) {
  for (const auto& v : f.variables())
    if (!(net.variable(v.name()) == v)) throw DomainMismatchError(v.name());
}

inline void resolve_names(const BracketExpression& e, const BayesianNetwork& net, const FunctionTable& fns) {
  for (const auto& t : e.targets) {
    const Variable& v = net.variable(t.variable);
    if (t.state) v.state_index(*t.state);
  }
  for (const auto& ev : e.evidence) {
    const Variable& v = net.variable(ev.variable());
    for (const auto& s : ev.states()) v.state_index(s);
  }
  for (const auto& ins : e.insertions)
    for (const auto& n : ins) net.variable(n);
  if (e.kind == BracketKind::expectation) {
    auto it = fns.find(e.function);
    if (it == fns.end()) throw NameError("unknown function '" + e.function + "'");
    check_function(net, it->second);
  }
  if (!e.op.empty()) {
    operator_variables(net, e.op, fns);
    if (auto it = fns.find(e.op); it != fns.end()) check_function(net, it->second);
  }
}

/// sum_{v1..vk} P(A | v1) P(v1 | v2) ... P(vk | ket) as a table over `targets`.
inline Factor insertion_chain(const BayesianNetwork& net, const std::vector<std::string>& targets,
                              const std::vector<std::vector<std::string>>& insertions,
                              const std::vector<EventSet>& ket, Method method) {
  if (insertions.empty()) return posterior(net, ket, targets, method);
  Factor weights = posterior(net, ket, insertions.back(), method);
  auto push_through = [&](const Factor& w, const std::vector<std::string>& next) {
    std::optional<std::vector<double>> acc;
    std::vector<Variable> scope;
    for (std::size_t cell = 0; cell < w.size(); ++cell) {
      if (!(w[cell] > 0.0)) continue;
      Factor p;
      try {
        p = posterior(net, to_events(w.assignment_of(cell)), next, method);
      } catch (const ZeroMassError&) {
        continue;
      }
      if (!acc) { acc.emplace(p.size(), 0.0); scope = p.scope(); }
      for (std::size_t i = 0; i < p.size(); ++i) (*acc)[i] += w[cell] * p[i];
    }
    if (!acc) throw ImpossibleEvidenceError();
    return Factor(std::move(scope), std::move(*acc));
  };
  for (std::size_t i = insertions.size() - 1; i-- > 0;) weights = push_through(weights, insertions[i]);
  return push_through(weights, targets);
}

inline std::vector<std::string> ket_variables(const BracketExpression& e) {
  std::vector<std::string> out;
  for (const auto& ev : e.evidence) out.push_back(ev.variable());
  return out;
}

/// Value of the probability part P(A | [V]... | ket) as a table over targets.
inline Factor probability_part(const BracketExpression& e, const BayesianNetwork& net,
                               const std::vector<EventSet>& ket, Method method) {
  return insertion_chain(net, e.target_names(), e.insertions, ket, method);
}

inline double expected_value(const BayesianNetwork& net, const StateFunction& f,
                             const std::vector<EventSet>& ket, Method method) {
  const Factor p = posterior(net, ket, f.variable_names(), method);
  double v = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) v += f.values()[i] * p[i];
  return v;
}

inline std::variant<double, Factor> finish(const BracketExpression& e, const Factor& table) {
  if (!e.fully_bound()) return table;
  Assignment a;
  for (const auto& t : e.targets) a[t.variable] = *t.state;
  return table.at(a);
}

}  // namespace detail

/// Classifies `e` against `net`. Throws NameError for unresolved names.
inline ValidityReport validate(const BracketExpression& e, const BayesianNetwork& net,
                               const FunctionTable& functions = {}) {
  detail::resolve_names(e, net, functions);
  const auto ket_vars = detail::ket_variables(e);
  auto in_ket = [&](const std::string& n) { return std::find(ket_vars.begin(), ket_vars.end(), n) != ket_vars.end(); };

  if (!e.op.empty()) {
    for (const auto& v : detail::operator_variables(net, e.op, functions)) {
      auto it = std::find_if(e.evidence.begin(), e.evidence.end(),
                             [&](const EventSet& ev) { return ev.variable() == v; });
      if (it == e.evidence.end() || !it->is_point())
        return {Validity::meaningless, "operator " + e.op + " acts on " + v +
                                           ", but the ket neither fixes " + v + " nor is Omega"};
    }
  }

  if (e.insertions.empty() || e.ket_is_omega()) return {};

  const auto bra = e.target_names();
  const bool same_domain = std::all_of(bra.begin(), bra.end(), in_ket);
  for (const auto& ins : e.insertions) {
    const bool foreign = std::none_of(ins.begin(), ins.end(), [&](const std::string& n) {
      return in_ket(n) || std::find(bra.begin(), bra.end(), n) != bra.end();
    });
    if (same_domain && foreign) {
      std::string names;
      for (const auto& n : ins) names += (names.empty() ? "" : ",") + n;
      return {Validity::invalid_insertion,
              "unit operator I_" + names + " inserted into a same-domain bracket"};
    }
  }

  // Cross-domain with a non-Omega ket: the rewrite is an identity only when
  // the bra is independent of the ket given the inserted variables.
  try {
    const Factor direct = detail::posterior(net, e.evidence, bra, Method::enumeration);
    const Factor rewritten = detail::probability_part(e, net, e.evidence, Method::enumeration);
    const double d = max_abs_difference(direct, rewritten);
    if (d > kInsertionTolerance)
      return {Validity::invalid_insertion,
              "inserted unit operators change the value by " + std::to_string(d) +
                  "; the bra is not independent of the ket given them"};
  } catch (const ZeroMassError&) {
    // Left to evaluate(), which reports the impossible evidence.
  }
  return {};
}

inline QueryResult evaluate(const BracketExpression& e, const BayesianNetwork& net,
                            const EvaluationOptions& opt = {}) {
  ValidityReport report = validate(e, net, opt.functions);
  if (!report.ok() && !opt.force) throw InvalidExpressionError(report);

  auto expect_given = [&](const std::vector<EventSet>& ket) {
    return detail::expected_value(net, opt.functions.at(e.function), ket, opt.method);
  };
  if (e.op.empty()) {
    if (e.kind == BracketKind::expectation) return {expect_given(e.evidence), report};
    return {detail::finish(e, detail::probability_part(e, net, e.evidence, opt.method)), report};
  }

  // Operator ket. Well-formed: P(A | Y | y) = F(y) P(A | y). The forced
  // diagnostic for a ket that does not fix Y is sum_y F(y) P(y | ket) P(A | y).
  const StateFunction& op = detail::operator_function(e.op, opt.functions);
  std::vector<std::pair<double, std::vector<EventSet>>> terms;
  if (report.ok()) {
    Assignment fixed;
    for (const auto& ev : e.evidence) fixed[ev.variable()] = ev.states().front();
    terms.emplace_back(op(fixed), e.evidence);
  } else {
    const Factor py = detail::posterior(net, e.evidence, op.variable_names(), opt.method);
    for (std::size_t cell = 0; cell < py.size(); ++cell)
      if (py[cell] > 0.0) {
        const Assignment ya = py.assignment_of(cell);
        terms.emplace_back(op(ya) * py[cell], to_events(ya));
      }
  }

  if (e.kind == BracketKind::expectation || e.fully_bound()) {
    double v = 0.0;
    for (const auto& [w, ket] : terms) {
      try {
        v += w * (e.kind == BracketKind::expectation
                      ? expect_given(ket)
                      : std::get<double>(detail::finish(e, detail::probability_part(e, net, ket, opt.method))));
      } catch (const ZeroMassError&) {
        if (report.ok()) throw;
      }
    }
    return {v, report};
  }

  std::vector<double> acc;
  std::vector<Variable> scope;
  for (const auto& [w, ket] : terms) {
    if (w < 0.0) throw SemanticError("operator '" + e.op + "' has a negative value; table form undefined");
    Factor part;
    try {
      part = detail::probability_part(e, net, ket, opt.method);
    } catch (const ZeroMassError&) {
      if (report.ok()) throw;
      continue;
    }
    if (acc.empty()) { acc.assign(part.size(), 0.0); scope = part.scope(); }
    for (std::size_t i = 0; i < part.size(); ++i) acc[i] += w * part[i];
  }
  if (acc.empty()) throw ImpossibleEvidenceError();
  return {Factor(std::move(scope), std::move(acc)), report};
}

inline QueryResult evaluate(std::string_view text, const BayesianNetwork& net,
                            const EvaluationOptions& opt = {}) {
  return evaluate(parse_query(text), net, opt);
}

}  // namespace pbn
