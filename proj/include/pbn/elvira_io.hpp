#pragma once

// Network file formats.
//
// Elvira subset:
//   document := "bnet" STRING "{" item* "}"
//   item     := node | link | relation
//   node     := "node" NAME "(finite-states)" "{" "states" "=" "(" NAME+ ")" ";" "}"
//   link     := "link" NAME NAME ";"            // parent child
//   relation := "relation" NAME "{" "values" "=" "table" "(" NUMBER+ ")" ";" "}"
// `//` comments run to end of line. Cosmetic `key = value;` fields (titles,
// coordinates, ...) are skipped with a warning. Relation values are row-major
// over (parents in link order, node states fastest).
//
// Native: a JSON object {name, nodes: [{name, states}], edges: [[parent, child]],
// cpts: {node: [values]}} with the same value layout.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "pbn/bayesnet.hpp"
#include "pbn/error.hpp"
#include "pbn/factor.hpp"

namespace pbn {

/// Rows within this distance of 1 are renormalized on load; beyond it, rejected.
inline constexpr double kLoadRowSlack = 1e-6;

namespace detail {

/// Installs one node's CPT from a flat value list, renormalizing rows that
/// are off by at most kLoadRowSlack.
inline void install_cpt(BayesianNetwork& net, const std::string& node, std::vector<double> values,
                        std::vector<std::string>* warnings) {
  std::size_t expected = 1;
  for (const auto& p : net.parents(node)) {
    const std::size_t c = net.variable(p).cardinality();
    if (c > kMaxFactorCells / expected) throw ResourceError("CPT of node '" + node + "' is too large");
    expected *= c;
  }
  const std::size_t card = net.variable(node).cardinality();
  if (card > kMaxFactorCells / expected) throw ResourceError("CPT of node '" + node + "' is too large");
  expected *= card;
  if (values.size() != expected)
    throw SemanticError("node '" + node + "': relation has " + std::to_string(values.size()) +
                        " values, expected " + std::to_string(expected));
  for (double v : values)
    if (!std::isfinite(v) || v < 0.0)
      throw SemanticError("node '" + node + "': probabilities must be finite and nonnegative");
  for (std::size_t row = 0; row < values.size(); row += card) {
    double s = 0.0;
    for (std::size_t k = 0; k < card; ++k) s += values[row + k];
    const double off = std::abs(s - 1.0);
    if (off <= kRowTolerance) continue;
    if (off > kLoadRowSlack)
      throw SemanticError("node '" + node + "': row " + std::to_string(row / card) + " sums to " +
                          std::to_string(s));
    for (std::size_t k = 0; k < card; ++k) values[row + k] /= s;
    if (warnings)
      warnings->push_back("node '" + node + "': row " + std::to_string(row / card) + " renormalized");
  }
  net.set_cpt(node, std::move(values));
}

inline void require_valid(const BayesianNetwork& net) {
  auto report = validate_network(net);
  if (!report.valid()) throw ValidationError(std::move(report));
}

enum class ETok { ident, string, number, lparen, rparen, lbrace, rbrace, semicolon, equals, comma, end };

struct EToken {
  ETok kind;
  std::string text;
  std::size_t offset, line, column;
};

class ElviraLexer {
 public:
  explicit ElviraLexer(std::string_view s) : s_(s) {}

  std::vector<EToken> run() {
    std::vector<EToken> out;
    while (true) {
      skip_space();
      if (i_ >= s_.size()) break;
      const std::size_t start = i_, line = line_, col = col_;
      const char c = s_[i_];
      auto push = [&](ETok k, std::string text) { out.push_back({k, std::move(text), start, line, col}); };
      if (ident_start(c)) {
        while (i_ < s_.size() && ident_char(s_[i_])) advance();
        push(ETok::ident, std::string(s_.substr(start, i_ - start)));
      } else if ((c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.') {
        while (i_ < s_.size() && number_char(s_[i_])) advance();
        push(ETok::number, std::string(s_.substr(start, i_ - start)));
      } else if (c == '"') {
        advance();
        std::string text;
        while (true) {
          if (i_ >= s_.size() || s_[i_] == '\n') fail("unterminated string", start, line, col);
          char d = s_[i_];
          advance();
          if (d == '"') break;
          if (d == '\\') {
            if (i_ >= s_.size()) fail("unterminated string", start, line, col);
            d = s_[i_];
            advance();
            if (d == 'n') d = '\n';
          }
          text += d;
        }
        push(ETok::string, std::move(text));
      } else {
        ETok k;
        switch (c) {
          case '(': k = ETok::lparen; break;
          case ')': k = ETok::rparen; break;
          case '{': k = ETok::lbrace; break;
          case '}': k = ETok::rbrace; break;
          case ';': k = ETok::semicolon; break;
          case '=': k = ETok::equals; break;
          case ',': k = ETok::comma; break;
          default: fail("unexpected character", start, line, col);
        }
        advance();
        push(k, std::string(1, c));
      }
    }
    out.push_back({ETok::end, "", s_.size(), line_, col_});
    return out;
  }

 private:
  [[noreturn]] static void fail(const std::string& what, std::size_t off, std::size_t line, std::size_t col) {
    throw SyntaxError(what, off, line, col);
  }
  static bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9') || c == '-'; }
  static bool number_char(char c) {
    return (c >= '0' && c <= '9') || c == '.' || c == 'e' || c == 'E' || c == '-' || c == '+';
  }
  void advance() {
    if (s_[i_] == '\n') { ++line_; col_ = 1; } else { ++col_; }
    ++i_;
  }
  void skip_space() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '/') {
        while (i_ < s_.size() && s_[i_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view s_;
  std::size_t i_ = 0, line_ = 1, col_ = 1;
};

inline bool cosmetic_field(std::string_view key) {
  static const std::set<std::string_view> keys = {
      "title", "comment", "author", "whochanged", "whenchanged", "version", "visualprecision",
      "kind-of-graph", "kind-of-node", "type-of-variable", "pos_x", "pos_y", "relevance", "purpose",
      "num-states", "kind-of-relation", "deterministic", "default", "precision"};
  return keys.count(key) > 0;
}

struct ElviraDocument {
  struct Node {
    std::string name;
    std::vector<std::string> states;
    std::size_t line;
  };
  struct Link {
    std::string parent, child;
    std::size_t line;
  };
  struct Relation {
    std::string node;
    std::vector<double> values;
    std::size_t line;
  };
  std::string name;
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<Relation> relations;
};

class ElviraParser {
 public:
  ElviraParser(std::string_view text, std::vector<std::string>* warnings)
      : toks_(ElviraLexer(text).run()), warnings_(warnings) {}

  ElviraDocument parse() {
    ElviraDocument doc;
    keyword("bnet");
    doc.name = expect(ETok::string, "network name string").text;
    expect(ETok::lbrace, "'{'");
    while (peek().kind != ETok::rbrace) {
      const EToken& t = peek();
      if (t.kind != ETok::ident) fail("expected 'node', 'link' or 'relation'", t);
      if (t.text == "node") doc.nodes.push_back(parse_node());
      else if (t.text == "link") doc.links.push_back(parse_link());
      else if (t.text == "relation") doc.relations.push_back(parse_relation());
      else skip_field();
    }
    expect(ETok::rbrace, "'}'");
    if (peek().kind != ETok::end) fail("unexpected input after network", peek());
    return doc;
  }

 private:
  [[noreturn]] static void fail(const std::string& what, const EToken& t) {
    throw SyntaxError(what + (t.kind == ETok::end ? " (found end of input)" : " (found '" + t.text + "')"),
                      t.offset, t.line, t.column);
  }
  const EToken& peek() const { return toks_[pos_]; }
  EToken expect(ETok k, const char* what) {
    if (peek().kind != k) fail(std::string("expected ") + what, peek());
    return toks_[pos_++];
  }
  void keyword(const char* kw) {
    if (peek().kind != ETok::ident || peek().text != kw) fail(std::string("expected '") + kw + "'", peek());
    ++pos_;
  }
  std::string name(const char* what) {
    const EToken& t = peek();
    if ((t.kind != ETok::ident && t.kind != ETok::string) || !is_identifier(t.text))
      fail(std::string("expected ") + what, t);
    return toks_[pos_++].text;
  }

  /// `key [words...] = value... ;` for a recognized cosmetic key.
  void skip_field() {
    const EToken key = peek();
    if (key.kind != ETok::ident || !cosmetic_field(key.text)) fail("unknown field", key);
    std::size_t depth = 0;
    while (true) {
      const EToken& t = peek();
      if (t.kind == ETok::end) fail("unterminated field '" + key.text + "'", t);
      if (t.kind == ETok::lparen) ++depth;
      if (t.kind == ETok::rparen) {
        if (depth == 0) fail("unbalanced ')'", t);
        --depth;
      }
      if ((t.kind == ETok::lbrace || t.kind == ETok::rbrace) && depth == 0) fail("expected ';'", t);
      ++pos_;
      if (t.kind == ETok::semicolon && depth == 0) break;
    }
    if (warnings_)
      warnings_->push_back("line " + std::to_string(key.line) + ": skipped field '" + key.text + "'");
  }

  ElviraDocument::Node parse_node() {
    const std::size_t line = peek().line;
    keyword("node");
    ElviraDocument::Node n{name("node name"), {}, line};
    expect(ETok::lparen, "'('");
    keyword("finite-states");
    expect(ETok::rparen, "')'");
    expect(ETok::lbrace, "'{'");
    bool have_states = false;
    while (peek().kind != ETok::rbrace) {
      if (peek().kind == ETok::ident && peek().text == "states") {
        if (have_states) fail("states declared twice", peek());
        ++pos_;
        expect(ETok::equals, "'='");
        expect(ETok::lparen, "'('");
        while (peek().kind != ETok::rparen) {
          n.states.push_back(name("state name"));
          if (peek().kind == ETok::comma) ++pos_;
        }
        ++pos_;
        if (n.states.empty()) fail("node needs at least one state", peek());
        expect(ETok::semicolon, "';'");
        have_states = true;
      } else {
        skip_field();
      }
    }
    ++pos_;
    if (!have_states) throw SemanticError("node '" + n.name + "' declares no states");
    return n;
  }

  ElviraDocument::Link parse_link() {
    const std::size_t line = peek().line;
    keyword("link");
    ElviraDocument::Link l{name("parent name"), name("child name"), line};
    expect(ETok::semicolon, "';'");
    return l;
  }

  ElviraDocument::Relation parse_relation() {
    const std::size_t line = peek().line;
    keyword("relation");
    ElviraDocument::Relation r{name("node name"), {}, line};
    expect(ETok::lbrace, "'{'");
    bool have_values = false;
    while (peek().kind != ETok::rbrace) {
      if (peek().kind == ETok::ident && peek().text == "values") {
        if (have_values) fail("values declared twice", peek());
        ++pos_;
        expect(ETok::equals, "'='");
        keyword("table");
        expect(ETok::lparen, "'('");
        while (peek().kind != ETok::rparen) {
          const EToken t = expect(ETok::number, "number");
          r.values.push_back(number(t));
          if (peek().kind == ETok::comma) ++pos_;
        }
        ++pos_;
        if (r.values.empty()) fail("empty table", peek());
        expect(ETok::semicolon, "';'");
        have_values = true;
      } else {
        skip_field();
      }
    }
    ++pos_;
    if (!have_values) throw SemanticError("relation for node '" + r.node + "' has no values");
    return r;
  }

  static double number(const EToken& t) {
    std::string_view s = t.text;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
      fail("malformed number", t);
    return v;
  }

  std::vector<EToken> toks_;
  std::size_t pos_ = 0;
  std::vector<std::string>* warnings_;
};

inline BayesianNetwork build(const ElviraDocument& doc, std::vector<std::string>* warnings) {
  BayesianNetwork net(doc.name);
  for (const auto& n : doc.nodes) {
    if (net.has_variable(n.name)) throw SemanticError("node '" + n.name + "' declared twice");
    net.add_variable(Variable(n.name, n.states));
  }
  for (const auto& l : doc.links) {
    for (const auto* end : {&l.parent, &l.child})
      if (!net.has_variable(*end))
        throw SemanticError("line " + std::to_string(l.line) + ": link references undeclared node '" +
                            *end + "'");
    net.add_edge(l.parent, l.child);
  }
  std::set<std::string> seen;
  for (const auto& r : doc.relations) {
    if (!net.has_variable(r.node))
      throw SemanticError("line " + std::to_string(r.line) + ": relation for undeclared node '" + r.node + "'");
    if (!seen.insert(r.node).second) throw SemanticError("node '" + r.node + "' has two relations");
    install_cpt(net, r.node, r.values, warnings);
  }
  for (const auto& n : doc.nodes)
    if (!seen.count(n.name)) throw SemanticError("node '" + n.name + "' has no relation; a CPT is required");
  require_valid(net);
  return net;
}

/// Row values in micro-units, rounded by largest remainder so each printed
/// row sums to exactly 1.
inline std::vector<std::int64_t> micro_units(std::span<const double> row) {
  std::vector<std::int64_t> units(row.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::int64_t sum = 0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double scaled = row[k] * 1e6;
    units[k] = static_cast<std::int64_t>(std::floor(scaled));
    sum += units[k];
    rem.emplace_back(scaled - static_cast<double>(units[k]), k);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; sum < 1000000 && i < rem.size(); ++i, ++sum) ++units[rem[i].second];
  return units;
}

inline std::string fixed6(std::int64_t micro) {
  std::string frac = std::to_string(micro % 1000000);
  return std::to_string(micro / 1000000) + "." + std::string(6 - frac.size(), '0') + frac;
}

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') { out += "\\n"; continue; }
    out += (static_cast<unsigned char>(c) < 0x20) ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace detail

/// Parses the Elvira subset. Skipped cosmetic fields and renormalized rows
/// are reported through `warnings`.
inline BayesianNetwork parse_elvira(std::string_view text, std::vector<std::string>* warnings = nullptr) {
  return detail::build(detail::ElviraParser(text, warnings).parse(), warnings);
}

inline std::string write_elvira(const BayesianNetwork& net) {
  std::string out = "// Bayesian network, Elvira format\n";
  out += "bnet " + detail::quote(net.name()) + " {\n";
  for (const auto& v : net.variables()) {
    out += "\nnode " + v.name() + " (finite-states) {\n  states = (";
    for (std::size_t i = 0; i < v.states().size(); ++i) out += (i ? " " : "") + v.states()[i];
    out += ");\n}\n";
  }
  out += "\n";
  for (const auto& child : net.names())
    for (const auto& parent : net.parents(child)) out += "link " + parent + " " + child + ";\n";
  for (const auto& name : net.names()) {
    const Factor& cpt = net.cpt(name);
    const std::size_t card = net.variable(name).cardinality();
    out += "\nrelation " + name + " {\n  values = table (";
    for (std::size_t row = 0; row < cpt.size(); row += card) {
      const auto units = detail::micro_units(cpt.values().subspan(row, card));
      for (std::size_t k = 0; k < card; ++k) out += (row + k ? " " : "") + detail::fixed6(units[k]);
    }
    out += ");\n}\n";
  }
  out += "}\n";
  return out;
}

inline std::string write_native(const BayesianNetwork& net) {
  nlohmann::ordered_json doc;
  doc["name"] = net.name();
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& v : net.variables()) doc["nodes"].push_back({{"name", v.name()}, {"states", v.states()}});
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& child : net.names())
    for (const auto& parent : net.parents(child)) doc["edges"].push_back({parent, child});
  doc["cpts"] = nlohmann::ordered_json::object();
  for (const auto& name : net.names()) {
    const auto vals = net.cpt(name).values();
    doc["cpts"][name] = std::vector<double>(vals.begin(), vals.end());
  }
  return doc.dump(2) + "\n";
}

inline BayesianNetwork parse_native(std::string_view text, std::vector<std::string>* warnings = nullptr) {
  using json = nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SyntaxError(e.what(), e.byte);
  }
  auto fail = [](const std::string& path, const std::string& what) -> void { throw SchemaError(path, what); };
  if (!doc.is_object()) fail("/", "expected an object");
  for (const char* key : {"name", "nodes", "edges", "cpts"})
    if (!doc.contains(key)) fail("/" + std::string(key), "missing field");
  if (!doc["name"].is_string()) fail("/name", "expected a string");
  if (!doc["nodes"].is_array()) fail("/nodes", "expected an array");
  if (!doc["edges"].is_array()) fail("/edges", "expected an array");
  if (!doc["cpts"].is_object()) fail("/cpts", "expected an object");

  BayesianNetwork net(doc["name"].get<std::string>());
  const json& nodes = doc["nodes"];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "/nodes/" + std::to_string(i);
    const json& n = nodes[i];
    if (!n.is_object() || !n.contains("name") || !n["name"].is_string())
      fail(path + "/name", "expected a string");
    if (!n.contains("states") || !n["states"].is_array()) fail(path + "/states", "expected an array");
    std::vector<std::string> states;
    for (const auto& s : n["states"]) {
      if (!s.is_string()) fail(path + "/states", "expected strings");
      states.push_back(s.get<std::string>());
    }
    const std::string name = n["name"].get<std::string>();
    if (net.has_variable(name)) fail(path + "/name", "duplicate node '" + name + "'");
    try {
      net.add_variable(Variable(name, std::move(states)));
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  const json& edges = doc["edges"];
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "/edges/" + std::to_string(i);
    const json& e = edges[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
      fail(path, "expected [parent, child]");
    const std::string parent = e[0].get<std::string>(), child = e[1].get<std::string>();
    for (const auto* end : {&parent, &child})
      if (!net.has_variable(*end)) fail(path, "unknown node '" + *end + "'");
    try {
      net.add_edge(parent, child);
    } catch (const Error& err) {
      fail(path, err.what());
    }
  }
  const json& cpts = doc["cpts"];
  for (auto it = cpts.begin(); it != cpts.end(); ++it)
    if (!net.has_variable(it.key())) fail("/cpts/" + it.key(), "cpt for unknown node");
  for (const auto& name : net.names()) {
    const std::string path = "/cpts/" + name;
    if (!cpts.contains(name)) fail(path, "missing cpt for node '" + name + "'");
    const json& arr = cpts[name];
    if (!arr.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> values;
    for (const auto& x : arr) {
      if (!x.is_number()) fail(path, "expected an array of numbers");
      values.push_back(x.get<double>());
    }
    try {
      detail::install_cpt(net, name, std::move(values), warnings);
    } catch (const ResourceError&) {
      throw;
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }
  detail::require_valid(net);
  return net;
}

/// Native if the first non-blank character is '{', Elvira otherwise.
inline BayesianNetwork parse_network(std::string_view text, std::vector<std::string>* warnings = nullptr) {
  const auto pos = text.find_first_not_of(" \t\r\n");
  if (pos != std::string_view::npos && text[pos] == '{') return parse_native(text, warnings);
  return parse_elvira(text, warnings);
}

}  // namespace pbn
