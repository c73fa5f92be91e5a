#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pbn/error.hpp"
#include "pbn/factor.hpp"

namespace pbn {

/// (left ⊥ right | given) over variable-name sets.
class CIStatement {
 public:
  CIStatement(std::vector<std::string> left, std::vector<std::string> right,
              std::vector<std::string> given = {})
      : left_(std::move(left)), right_(std::move(right)), given_(std::move(given)) {
    if (left_.empty() || right_.empty())
      throw SemanticError("independence statement needs nonempty left and right sets");
    std::set<std::string> seen;
    for (const auto* side : {&left_, &right_, &given_})
      for (const auto& n : *side)
        if (!seen.insert(n).second)
          throw SemanticError("variable '" + n + "' appears twice in an independence statement");
  }

  const std::vector<std::string>& left() const noexcept { return left_; }
  const std::vector<std::string>& right() const noexcept { return right_; }
  const std::vector<std::string>& given() const noexcept { return given_; }

  CIStatement swapped() const { return CIStatement(right_, left_, given_); }

  /// Same three sets, ignoring order within each.
  bool equivalent(const CIStatement& o) const {
    auto s = [](const std::vector<std::string>& v) { return std::set<std::string>(v.begin(), v.end()); };
    return s(left_) == s(o.left_) && s(right_) == s(o.right_) && s(given_) == s(o.given_);
  }

  /// One statement per right-hand variable.
  std::vector<CIStatement> decompose() const {
    std::vector<CIStatement> out;
    for (const auto& r : right_) out.emplace_back(left_, std::vector<std::string>{r}, given_);
    return out;
  }

  std::string to_string() const {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
      return s;
    };
    std::string s = join(left_) + " _|_ " + join(right_);
    if (!given_.empty()) s += " | " + join(given_);
    return s;
  }

 private:
  std::vector<std::string> left_, right_, given_;
};

class BayesianNetwork {
 public:
  explicit BayesianNetwork(std::string name = "network") : name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

  const Variable& add_variable(Variable v) {
    if (find(v.name())) throw SemanticError("duplicate variable '" + v.name() + "'");
    nodes_.push_back(Node{std::move(v), {}, std::nullopt});
    return nodes_.back().var;
  }

  /// Appends `parent` to `child`'s ordered parent list.
  void add_edge(const std::string& parent, const std::string& child) {
    node(parent);
    Node& c = node(child);
    if (std::find(c.parents.begin(), c.parents.end(), parent) != c.parents.end())
      throw SemanticError("duplicate link " + parent + " -> " + child);
    c.parents.push_back(parent);
  }

  /// CPT over (parents..., node), values row-major with the node fastest.
  void set_cpt(const std::string& name, std::vector<double> values) {
    Node& n = node(name);
    std::vector<Variable> scope;
    for (const auto& p : n.parents) scope.push_back(node(p).var);
    scope.push_back(n.var);
    const std::size_t expected = detail::cell_count(scope);
    if (values.size() != expected)
      throw SemanticError("node '" + name + "': CPT needs " + std::to_string(expected) +
                          " values, got " + std::to_string(values.size()));
    n.cpt = Factor(std::move(scope), std::move(values));
  }

  /// Installs an arbitrary factor; consistency is left to validate_network.
  void set_cpt(const std::string& name, Factor cpt) { node(name).cpt = std::move(cpt); }

  std::size_t size() const noexcept { return nodes_.size(); }

  std::vector<Variable> variables() const {
    std::vector<Variable> out;
    for (const auto& n : nodes_) out.push_back(n.var);
    return out;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& n : nodes_) out.push_back(n.var.name());
    return out;
  }

  bool has_variable(std::string_view name) const { return find(name) != nullptr; }
  const Variable& variable(std::string_view name) const { return node(name).var; }
  const std::vector<std::string>& parents(std::string_view name) const { return node(name).parents; }

  std::vector<std::string> children(std::string_view name) const {
    node(name);
    std::vector<std::string> out;
    for (const auto& n : nodes_)
      if (std::find(n.parents.begin(), n.parents.end(), name) != n.parents.end())
        out.push_back(n.var.name());
    return out;
  }

  bool has_cpt(std::string_view name) const { return node(name).cpt.has_value(); }
  const Factor& cpt(std::string_view name) const {
    const Node& n = node(name);
    if (!n.cpt) throw SemanticError("node '" + n.var.name() + "' has no CPT");
    return *n.cpt;
  }

 private:
  struct Node {
    Variable var;
    std::vector<std::string> parents;
    std::optional<Factor> cpt;
  };

  const Node* find(std::string_view name) const {
    for (const auto& n : nodes_)
      if (n.var.name() == name) return &n;
    return nullptr;
  }
  const Node& node(std::string_view name) const {
    if (const Node* n = find(name)) return *n;
    throw NameError("unknown variable '" + std::string(name) + "'");
  }
  Node& node(std::string_view name) {
    return const_cast<Node&>(std::as_const(*this).node(name));
  }

  std::string name_;
  std::vector<Node> nodes_;
};

enum class ViolationKind { cycle, missing_cpt, scope_mismatch, row_normalization };

struct Violation {
  ViolationKind kind;
  std::string node;
  std::string message;
  double excess = 0.0;             // row sum - 1 for row_normalization
  std::vector<std::string> cycle;  // for cycle
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t node_count = 0;
  std::size_t rows_checked = 0;

  bool valid() const noexcept { return violations.empty(); }

  std::string summary() const {
    std::ostringstream os;
    if (valid()) {
      os << "valid: " << node_count << " nodes, " << rows_checked << " CPT rows sum to 1";
      return os.str();
    }
    os << violations.size() << " violation(s):";
    for (const auto& v : violations) os << "\n  " << v.node << ": " << v.message;
    return os.str();
  }
};

class ValidationError : public SemanticError {
 public:
  explicit ValidationError(ValidationReport report)
      : SemanticError("invalid network: " + report.summary()), report_(std::move(report)) {}
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Tolerance on CPT row sums.
inline constexpr double kRowTolerance = 1e-9;

namespace detail {

/// Kahn's algorithm, always picking the earliest-declared ready node. Returns
/// the emitted prefix; it is complete iff the graph is acyclic.
inline std::vector<std::string> kahn_order(const BayesianNetwork& net) {
  const auto names = net.names();
  std::vector<bool> done(names.size(), false);
  std::vector<std::string> order;
  std::set<std::string> emitted;
  bool progress = true;
  while (progress && order.size() < names.size()) {
    progress = false;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (done[i]) continue;
      const auto& ps = net.parents(names[i]);
      if (std::all_of(ps.begin(), ps.end(), [&](const std::string& p) { return emitted.count(p) > 0; })) {
        done[i] = true;
        order.push_back(names[i]);
        emitted.insert(names[i]);
        progress = true;
        break;
      }
    }
  }
  return order;
}

/// Some directed cycle among nodes not in `emitted`, listed parent -> child.
inline std::vector<std::string> find_cycle(const BayesianNetwork& net,
                                           const std::vector<std::string>& emitted) {
  std::set<std::string> done(emitted.begin(), emitted.end());
  std::string start;
  for (const auto& n : net.names())
    if (!done.count(n)) { start = n; break; }
  // Every remaining node has a remaining parent; walk parents until a repeat.
  std::vector<std::string> path;
  std::string cur = start;
  while (std::find(path.begin(), path.end(), cur) == path.end()) {
    path.push_back(cur);
    for (const auto& p : net.parents(cur))
      if (!done.count(p)) { cur = p; break; }
  }
  std::vector<std::string> cycle(std::find(path.begin(), path.end(), cur), path.end());
  std::reverse(cycle.begin(), cycle.end());
  return cycle;
}

}  // namespace detail

/// Parents before children; ties broken by declaration order.
inline std::vector<std::string> topological_order(const BayesianNetwork& net) {
  auto order = detail::kahn_order(net);
  if (order.size() != net.size()) throw CycleError(detail::find_cycle(net, order));
  return order;
}

inline ValidationReport validate_network(const BayesianNetwork& net) {
  ValidationReport r;
  r.node_count = net.size();
  const auto order = detail::kahn_order(net);
  if (order.size() != net.size()) {
    auto cycle = detail::find_cycle(net, order);
    std::string msg = "directed cycle ";
    for (const auto& n : cycle) msg += n + " -> ";
    msg += cycle.front();
    r.violations.push_back({ViolationKind::cycle, cycle.front(), msg, 0.0, cycle});
  }
  for (const auto& name : net.names()) {
    if (!net.has_cpt(name)) {
      r.violations.push_back({ViolationKind::missing_cpt, name, "missing CPT", 0.0, {}});
      continue;
    }
    const Factor& cpt = net.cpt(name);
    std::vector<Variable> expected;
    for (const auto& p : net.parents(name)) expected.push_back(net.variable(p));
    expected.push_back(net.variable(name));
    if (cpt.scope() != expected) {
      std::string want;
      for (const auto& v : expected) want += (want.empty() ? "" : ", ") + v.name();
      r.violations.push_back({ViolationKind::scope_mismatch, name,
                              "CPT scope must be (" + want + ")", 0.0, {}});
      continue;
    }
    const std::size_t card = net.variable(name).cardinality();
    for (std::size_t row = 0; row < cpt.size(); row += card) {
      double s = 0.0;
      for (std::size_t k = 0; k < card; ++k) s += cpt[row + k];
      ++r.rows_checked;
      if (std::abs(s - 1.0) > kRowTolerance) {
        std::ostringstream os;
        os << "CPT row " << row / card << " sums to " << s;
        r.violations.push_back({ViolationKind::row_normalization, name, os.str(), s - 1.0, {}});
      }
    }
  }
  return r;
}

/// Product of all CPTs in topological order.
inline Factor joint_distribution(const BayesianNetwork& net) {
  auto report = validate_network(net);
  if (!report.valid()) throw ValidationError(std::move(report));
  Factor joint;
  for (const auto& name : topological_order(net)) joint = factor_product(joint, net.cpt(name));
  return joint;
}

inline std::set<std::string> descendants(const BayesianNetwork& net, const std::string& node) {
  std::set<std::string> seen;
  std::deque<std::string> todo{node};
  while (!todo.empty()) {
    auto cur = todo.front();
    todo.pop_front();
    for (auto& c : net.children(cur))
      if (seen.insert(c).second) todo.push_back(c);
  }
  return seen;
}

/// (X ⊥ NonDesc(X) \ Pa(X) | Pa(X)) for every node where the middle set is nonempty.
inline std::vector<CIStatement> local_independencies(const BayesianNetwork& net) {
  topological_order(net);  // rejects cycles
  std::vector<CIStatement> out;
  for (const auto& name : net.names()) {
    const auto desc = descendants(net, name);
    const auto& parents = net.parents(name);
    std::vector<std::string> rest;
    for (const auto& other : net.names()) {
      if (other == name || desc.count(other)) continue;
      if (std::find(parents.begin(), parents.end(), other) != parents.end()) continue;
      rest.push_back(other);
    }
    if (!rest.empty()) out.emplace_back(std::vector<std::string>{name}, rest, parents);
  }
  return out;
}

struct ChainRuleTerm {
  std::string node;
  std::vector<std::string> generic;  // every predecessor in the order
  std::vector<std::string> reduced;  // the node's parents
};

inline std::vector<ChainRuleTerm> chain_rule_factorization(const BayesianNetwork& net,
                                                           const std::vector<std::string>& order) {
  std::set<std::string> given(order.begin(), order.end());
  if (order.size() != net.size() || given.size() != order.size())
    throw SemanticError("chain-rule order must be a permutation of the network's nodes");
  for (const auto& n : order) net.variable(n);
  std::vector<ChainRuleTerm> out;
  std::vector<std::string> before;
  for (const auto& n : order) {
    out.push_back({n, before, net.parents(n)});
    before.push_back(n);
  }
  return out;
}

/// Multiplies P(node | conditioning set) tables computed from `joint`.
inline Factor chain_rule_product(const Factor& joint, const std::vector<ChainRuleTerm>& terms,
                                 bool reduced) {
  Factor out;
  for (const auto& t : terms)
    out = factor_product(out, conditional_table(joint, reduced ? t.reduced : t.generic, t.node));
  return out;
}

/// Difficulty, Intelligence, Grade, SAT, Letter.
inline BayesianNetwork student_network() {
  BayesianNetwork net("Student");
  net.add_variable(Variable("D", {"d0", "d1"}));
  net.add_variable(Variable("I", {"i0", "i1"}));
  net.add_variable(Variable("G", {"g1", "g2", "g3"}));
  net.add_variable(Variable("S", {"s0", "s1"}));
  net.add_variable(Variable("L", {"l0", "l1"}));
  net.add_edge("I", "G");
  net.add_edge("D", "G");
  net.add_edge("I", "S");
  net.add_edge("G", "L");
  net.set_cpt("D", {0.6, 0.4});
  net.set_cpt("I", {0.7, 0.3});
  net.set_cpt("G", {0.3, 0.4, 0.3,      // i0 d0
                    0.05, 0.25, 0.7,    // i0 d1
                    0.9, 0.08, 0.02,    // i1 d0
                    0.5, 0.3, 0.2});    // i1 d1
  net.set_cpt("S", {0.95, 0.05, 0.2, 0.8});
  net.set_cpt("L", {0.1, 0.9, 0.4, 0.6, 0.99, 0.01});
  return net;
}

/// The I -> S fragment of the Student network.
inline BayesianNetwork intelligence_sat_network() {
  BayesianNetwork net("IntelligenceSAT");
  net.add_variable(Variable("I", {"i0", "i1"}));
  net.add_variable(Variable("S", {"s0", "s1"}));
  net.add_edge("I", "S");
  net.set_cpt("I", {0.7, 0.3});
  net.set_cpt("S", {0.95, 0.05, 0.2, 0.8});
  return net;
}

struct RandomNetworkOptions {
  std::size_t max_nodes = 5;
  std::size_t min_cardinality = 2;
  std::size_t max_cardinality = 3;
  std::size_t max_parents = 3;
  double edge_probability = 0.5;
  double zero_cell_probability = 0.1;
};

/// Seeded random DAG with random CPTs. Node names X0..Xn-1, states s0..sk-1;
/// declaration order is shuffled independently of the topological order.
inline BayesianNetwork random_network(std::uint64_t seed, const RandomNetworkOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = uniform_int(1, opt.max_nodes);
  std::vector<std::size_t> topo(n);
  std::iota(topo.begin(), topo.end(), 0);
  std::shuffle(topo.begin(), topo.end(), rng);
  std::vector<std::size_t> declared = topo;
  std::shuffle(declared.begin(), declared.end(), rng);

  BayesianNetwork net("random_" + std::to_string(seed));
  std::vector<std::size_t> cards(n);
  for (std::size_t id : declared) {
    cards[id] = uniform_int(opt.min_cardinality, opt.max_cardinality);
    std::vector<std::string> states;
    for (std::size_t s = 0; s < cards[id]; ++s) states.push_back("s" + std::to_string(s));
    net.add_variable(Variable("X" + std::to_string(id), std::move(states)));
  }
  for (std::size_t pos = 0; pos < n; ++pos) {
    std::size_t added = 0;
    for (std::size_t q = 0; q < pos && added < opt.max_parents; ++q) {
      if (unit(rng) < opt.edge_probability) {
        net.add_edge("X" + std::to_string(topo[q]), "X" + std::to_string(topo[pos]));
        ++added;
      }
    }
  }
  for (std::size_t id = 0; id < n; ++id) {
    const std::string name = "X" + std::to_string(id);
    std::size_t rows = 1;
    for (const auto& p : net.parents(name)) rows *= net.variable(p).cardinality();
    const std::size_t card = cards[id];
    std::vector<double> values;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row(card);
      for (auto& x : row) x = unit(rng) < opt.zero_cell_probability ? 0.0 : 0.05 + unit(rng);
      if (std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; }))
        row[uniform_int(0, card - 1)] = 1.0;
      const double s = std::accumulate(row.begin(), row.end(), 0.0);
      for (auto& x : row) values.push_back(x / s);
    }
    net.set_cpt(name, std::move(values));
  }
  return net;
}

}  // namespace pbn
