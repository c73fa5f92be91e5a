#pragma once

// Dense factor algebra over discrete variables.
//
// A Factor stores one nonnegative real per joint assignment of its scope,
// laid out row-major with the LAST scope variable varying fastest. All
// operations are pure and return new factors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pbn/error.hpp"

namespace pbn {

/// Largest number of cells any factor may hold.
inline constexpr std::size_t kMaxFactorCells = std::size_t{1} << 20;

/// `[A-Za-z_][A-Za-z0-9_]*`
inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s.front())) return false;
  return std::all_of(s.begin() + 1, s.end(), [&](char c) { return alpha(c) || digit(c); });
}

class Variable {
 public:
  Variable(std::string name, std::vector<std::string> states)
      : name_(std::move(name)), states_(std::move(states)) {
    if (!is_identifier(name_)) throw NameError("invalid variable name '" + name_ + "'");
    if (states_.empty()) throw SemanticError("variable '" + name_ + "' has no states");
    std::set<std::string_view> seen;
    for (const auto& s : states_) {
      if (!is_identifier(s))
        throw NameError("invalid state name '" + s + "' for variable '" + name_ + "'");
      if (!seen.insert(s).second)
        throw SemanticError("duplicate state '" + s + "' in variable '" + name_ + "'");
    }
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& states() const noexcept { return states_; }
  std::size_t cardinality() const noexcept { return states_.size(); }

  std::optional<std::size_t> find_state(std::string_view state) const {
    auto it = std::find(states_.begin(), states_.end(), state);
    if (it == states_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
  }

  std::size_t state_index(std::string_view state) const {
    if (auto i = find_state(state)) return *i;
    throw NameError("unknown state '" + std::string(state) + "' for variable '" + name_ + "'");
  }

  friend bool operator==(const Variable&, const Variable&) = default;

 private:
  std::string name_;
  std::vector<std::string> states_;
};

/// Variable name -> state name. Partial assignments act as conjunctive events.
using Assignment = std::map<std::string, std::string>;

/// A disjunctive event on one variable: X in {states...}.
class EventSet {
 public:
  EventSet(std::string variable, std::vector<std::string> states)
      : variable_(std::move(variable)), states_(std::move(states)) {
    if (states_.empty()) throw SemanticError("empty event set for '" + variable_ + "'");
    std::set<std::string_view> seen;
    for (const auto& s : states_)
      if (!seen.insert(s).second)
        throw SemanticError("duplicate state '" + s + "' in event set for '" + variable_ + "'");
  }

  static EventSet point(std::string variable, std::string state) {
    return EventSet(std::move(variable), {std::move(state)});
  }

  const std::string& variable() const noexcept { return variable_; }
  const std::vector<std::string>& states() const noexcept { return states_; }
  bool contains(std::string_view s) const {
    return std::find(states_.begin(), states_.end(), s) != states_.end();
  }
  bool is_point() const noexcept { return states_.size() == 1; }

  friend bool operator==(const EventSet&, const EventSet&) = default;

 private:
  std::string variable_;
  std::vector<std::string> states_;
};

inline std::vector<EventSet> to_events(const Assignment& a) {
  std::vector<EventSet> out;
  for (const auto& [var, state] : a) out.push_back(EventSet::point(var, state));
  return out;
}

namespace detail {

inline std::size_t cell_count(const std::vector<Variable>& scope) {
  std::size_t n = 1;
  for (const auto& v : scope) {
    if (v.cardinality() > kMaxFactorCells / n)
      throw ResourceError("factor over " + std::to_string(scope.size()) +
                          " variables exceeds the cell cap of " + std::to_string(kMaxFactorCells));
    n *= v.cardinality();
  }
  return n;
}

inline std::vector<std::size_t> strides_of(const std::vector<Variable>& scope) {
  std::vector<std::size_t> s(scope.size(), 1);
  for (std::size_t i = scope.size(); i-- > 1;) s[i - 1] = s[i] * scope[i].cardinality();
  return s;
}

/// Stride of each `outer` variable inside `inner`'s layout; 0 when absent.
inline std::vector<std::size_t> projected_strides(const std::vector<Variable>& outer,
                                                  const std::vector<Variable>& inner) {
  const auto inner_strides = strides_of(inner);
  std::vector<std::size_t> out(outer.size(), 0);
  for (std::size_t i = 0; i < outer.size(); ++i)
    for (std::size_t j = 0; j < inner.size(); ++j)
      if (inner[j].name() == outer[i].name()) out[i] = inner_strides[j];
  return out;
}

/// Walks every cell of `scope` in layout order, tracking the matching linear
/// index of each projected operand. `visit(linear, operand_indices)`.
template <class Visit>
void odometer(const std::vector<Variable>& scope,
              const std::vector<std::vector<std::size_t>>& operand_strides, Visit&& visit) {
  const std::size_t k = scope.size();
  const std::size_t m = operand_strides.size();
  const std::size_t n = cell_count(scope);
  std::vector<std::size_t> digit(k, 0), idx(m, 0);
  for (std::size_t lin = 0; lin < n; ++lin) {
    visit(lin, std::span<const std::size_t>(idx));
    for (std::size_t d = k; d-- > 0;) {
      const std::size_t card = scope[d].cardinality();
      if (++digit[d] < card) {
        for (std::size_t j = 0; j < m; ++j) idx[j] += operand_strides[j][d];
        break;
      }
      for (std::size_t j = 0; j < m; ++j) idx[j] -= operand_strides[j][d] * (card - 1);
      digit[d] = 0;
    }
  }
}

}  // namespace detail

class Factor {
 public:
  /// The empty-scope factor with value 1.
  Factor() : values_{1.0} {}

  Factor(std::vector<Variable> scope, std::vector<double> values)
      : scope_(std::move(scope)), values_(std::move(values)) {
    std::set<std::string_view> names;
    for (const auto& v : scope_)
      if (!names.insert(v.name()).second)
        throw ScopeError("variable '" + v.name() + "' appears twice in a factor scope");
    const std::size_t n = detail::cell_count(scope_);
    if (values_.size() != n)
      throw SemanticError("factor needs " + std::to_string(n) + " values, got " +
                          std::to_string(values_.size()));
    for (double x : values_)
      if (!std::isfinite(x) || x < 0.0)
        throw SemanticError("factor cells must be finite and nonnegative");
  }

  static Factor scalar(double value) { return Factor({}, {value}); }

  /// Single-variable factor with all mass on `state`.
  static Factor point_mass(const Variable& var, std::string_view state) {
    std::vector<double> v(var.cardinality(), 0.0);
    v[var.state_index(state)] = 1.0;
    return Factor({var}, std::move(v));
  }

  const std::vector<Variable>& scope() const noexcept { return scope_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool normalized() const noexcept { return normalized_; }
  double operator[](std::size_t linear) const { return values_.at(linear); }

  std::vector<std::string> variable_names() const {
    std::vector<std::string> out;
    for (const auto& v : scope_) out.push_back(v.name());
    return out;
  }

  std::optional<std::size_t> position(std::string_view name) const {
    for (std::size_t i = 0; i < scope_.size(); ++i)
      if (scope_[i].name() == name) return i;
    return std::nullopt;
  }
  bool has_variable(std::string_view name) const { return position(name).has_value(); }

  const Variable& variable(std::string_view name) const {
    if (auto p = position(name)) return scope_[*p];
    throw ScopeError("variable '" + std::string(name) + "' is not in the factor scope");
  }

  /// Linear index of a full assignment over the scope; extra bindings ignored.
  std::size_t linear_index(const Assignment& a) const {
    const auto strides = detail::strides_of(scope_);
    std::size_t lin = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i) {
      auto it = a.find(scope_[i].name());
      if (it == a.end())
        throw ScopeError("assignment does not bind '" + scope_[i].name() + "'");
      lin += strides[i] * scope_[i].state_index(it->second);
    }
    return lin;
  }

  Assignment assignment_of(std::size_t linear) const {
    Assignment a;
    for (std::size_t i = scope_.size(); i-- > 0;) {
      const std::size_t card = scope_[i].cardinality();
      a.emplace(scope_[i].name(), scope_[i].states()[linear % card]);
      linear /= card;
    }
    return a;
  }

  double at(const Assignment& a) const { return values_[linear_index(a)]; }

  double total() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

 private:
  struct Trusted {};
  Factor(Trusted, std::vector<Variable> scope, std::vector<double> values, bool normalized)
      : scope_(std::move(scope)), values_(std::move(values)), normalized_(normalized) {}

  friend Factor factor_product(const Factor&, const Factor&);
  friend Factor sum_out(const Factor&, const std::vector<std::string>&);
  friend Factor restrict(const Factor&, const std::vector<EventSet>&);
  friend Factor normalize(const Factor&);
  friend Factor reorder(const Factor&, const std::vector<std::string>&);
  friend Factor scale(const Factor&, double);

  std::vector<Variable> scope_;
  std::vector<double> values_;
  bool normalized_ = false;
};

/// Pointwise product. Scope is a's order followed by b's unseen variables.
inline Factor factor_product(const Factor& a, const Factor& b) {
  std::vector<Variable> scope = a.scope();
  for (const auto& v : b.scope()) {
    if (auto p = a.position(v.name())) {
      if (!(a.scope()[*p] == v)) throw DomainMismatchError(v.name());
    } else {
      scope.push_back(v);
    }
  }
  std::vector<double> out(detail::cell_count(scope));
  const std::vector<std::vector<std::size_t>> strides = {
      detail::projected_strides(scope, a.scope()), detail::projected_strides(scope, b.scope())};
  detail::odometer(scope, strides, [&](std::size_t lin, std::span<const std::size_t> idx) {
    out[lin] = a.values_[idx[0]] * b.values_[idx[1]];
  });
  return Factor(Factor::Trusted{}, std::move(scope), std::move(out), false);
}

/// Sums out `vars`; remaining variables keep their relative order.
inline Factor sum_out(const Factor& f, const std::vector<std::string>& vars) {
  for (const auto& name : vars)
    if (!f.has_variable(name))
      throw ScopeError("cannot sum out '" + name + "': not in the factor scope");
  std::vector<Variable> kept;
  for (const auto& v : f.scope())
    if (std::find(vars.begin(), vars.end(), v.name()) == vars.end()) kept.push_back(v);
  std::vector<double> out(detail::cell_count(kept), 0.0);
  const std::vector<std::vector<std::size_t>> strides = {
      detail::projected_strides(f.scope(), kept)};
  detail::odometer(f.scope(), strides, [&](std::size_t lin, std::span<const std::size_t> idx) {
    out[idx[0]] += f.values_[lin];
  });
  return Factor(Factor::Trusted{}, std::move(kept), std::move(out), f.normalized_);
}

/// Zeroes every cell whose state lies outside one of the event sets.
inline Factor restrict(const Factor& f, const std::vector<EventSet>& evidence) {
  std::vector<double> out = f.values_;
  const auto strides = detail::strides_of(f.scope());
  for (const auto& ev : evidence) {
    const auto pos = f.position(ev.variable());
    if (!pos) throw ScopeError("evidence variable '" + ev.variable() + "' is not in the factor scope");
    const Variable& var = f.scope()[*pos];
    std::vector<bool> allowed(var.cardinality(), false);
    for (const auto& s : ev.states()) allowed[var.state_index(s)] = true;
    const std::size_t stride = strides[*pos], card = var.cardinality();
    for (std::size_t lin = 0; lin < out.size(); ++lin)
      if (!allowed[(lin / stride) % card]) out[lin] = 0.0;
  }
  return Factor(Factor::Trusted{}, f.scope_, std::move(out), false);
}

inline Factor normalize(const Factor& f) {
  const double mass = f.total();
  if (!(mass > 0.0)) throw ZeroMassError();
  std::vector<double> out = f.values_;
  for (double& x : out) x /= mass;
  return Factor(Factor::Trusted{}, f.scope_, std::move(out), true);
}

inline Factor scale(const Factor& f, double k) {
  if (!std::isfinite(k) || k < 0.0) throw SemanticError("scale factor must be finite and nonnegative");
  std::vector<double> out = f.values_;
  for (double& x : out) x *= k;
  return Factor(Factor::Trusted{}, f.scope_, std::move(out), false);
}

/// Permutes the scope into `order`, which must name every scope variable once.
inline Factor reorder(const Factor& f, const std::vector<std::string>& order) {
  if (order.size() != f.scope().size())
    throw ScopeError("reorder needs exactly the factor's variables");
  std::vector<Variable> scope;
  for (const auto& name : order) {
    if (std::count(order.begin(), order.end(), name) != 1)
      throw ScopeError("variable '" + name + "' named twice");
    scope.push_back(f.variable(name));
  }
  if (scope == f.scope()) return f;
  std::vector<double> out(f.size());
  const std::vector<std::vector<std::size_t>> strides = {
      detail::projected_strides(scope, f.scope())};
  detail::odometer(scope, strides, [&](std::size_t lin, std::span<const std::size_t> idx) {
    out[lin] = f.values_[idx[0]];
  });
  return Factor(Factor::Trusted{}, std::move(scope), std::move(out), f.normalized_);
}

/// Marginal over `keep`, laid out in `keep` order.
inline Factor marginal(const Factor& f, const std::vector<std::string>& keep) {
  std::vector<std::string> drop;
  for (const auto& v : f.scope())
    if (std::find(keep.begin(), keep.end(), v.name()) == keep.end()) drop.push_back(v.name());
  return reorder(sum_out(f, drop), keep);
}

namespace detail {

/// P(targets | evidence) where targets may overlap the evidence variables.
inline Factor posterior(const Factor& joint, const std::vector<EventSet>& evidence,
                        const std::vector<std::string>& targets) {
  for (const auto& t : targets)
    if (!joint.has_variable(t)) throw ScopeError("target '" + t + "' is not in the factor scope");
  const Factor restricted = restrict(joint, evidence);
  const double mass = restricted.total();
  if (!(mass > 0.0)) throw ImpossibleEvidenceError();
  return normalize(marginal(restricted, targets));
}

}  // namespace detail

/// P(targets | evidence) = sum_out(restrict(joint, evidence)) / P(evidence).
inline Factor condition(const Factor& joint, const std::vector<EventSet>& evidence,
                        const std::vector<std::string>& targets) {
  for (const auto& ev : evidence)
    if (std::find(targets.begin(), targets.end(), ev.variable()) != targets.end())
      throw ScopeError("target '" + ev.variable() + "' also appears as evidence");
  return detail::posterior(joint, evidence, targets);
}

/// The table P(node | given) over (given..., node). Rows whose conditioning
/// assignment has zero mass are left at zero.
inline Factor conditional_table(const Factor& joint, const std::vector<std::string>& given,
                                const std::string& node) {
  std::vector<std::string> keep = given;
  keep.push_back(node);
  Factor m = marginal(joint, keep);
  const std::size_t card = m.variable(node).cardinality();
  std::vector<double> v(m.values().begin(), m.values().end());
  for (std::size_t row = 0; row < v.size(); row += card) {
    double s = 0.0;
    for (std::size_t k = 0; k < card; ++k) s += v[row + k];
    for (std::size_t k = 0; k < card; ++k) v[row + k] = s > 0.0 ? v[row + k] / s : 0.0;
  }
  return Factor(m.scope(), std::move(v));
}

/// Largest cellwise |a - b| after aligning b's scope to a's.
inline double max_abs_difference(const Factor& a, const Factor& b) {
  const Factor bb = reorder(b, a.variable_names());
  for (std::size_t i = 0; i < a.scope().size(); ++i)
    if (!(a.scope()[i] == bb.scope()[i])) throw DomainMismatchError(a.scope()[i].name());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - bb[i]));
  return d;
}

/// A real-valued function of a set of variables, total over their joint states.
class StateFunction {
 public:
  StateFunction(std::string name, std::vector<Variable> variables, std::vector<double> values)
      : name_(std::move(name)), variables_(std::move(variables)), values_(std::move(values)) {
    if (values_.size() != detail::cell_count(variables_))
      throw SemanticError("function '" + name_ + "' must define one value per joint state");
    for (double x : values_)
      if (!std::isfinite(x)) throw SemanticError("function '" + name_ + "' has a non-finite value");
  }

  /// Builds from an explicit table keyed by state tuples (in `variables` order).
  static StateFunction from_table(std::string name, std::vector<Variable> variables,
                                  const std::map<std::vector<std::string>, double>& table) {
    Factor layout(variables, std::vector<double>(detail::cell_count(variables), 0.0));
    std::vector<double> values(layout.size());
    for (std::size_t lin = 0; lin < layout.size(); ++lin) {
      const Assignment a = layout.assignment_of(lin);
      std::vector<std::string> key;
      for (const auto& v : variables) key.push_back(a.at(v.name()));
      auto it = table.find(key);
      if (it == table.end())
        throw SemanticError("function '" + name + "' is not defined on every joint state");
      values[lin] = it->second;
    }
    if (table.size() != values.size())
      throw SemanticError("function '" + name + "' has entries outside its domain");
    return StateFunction(std::move(name), std::move(variables), std::move(values));
  }

  static StateFunction constant(std::string name, double c) {
    return StateFunction(std::move(name), {}, {c});
  }

  static StateFunction indicator(std::string name, const Variable& var, std::string_view state) {
    std::vector<double> v(var.cardinality(), 0.0);
    v[var.state_index(state)] = 1.0;
    return StateFunction(std::move(name), {var}, std::move(v));
  }

  /// Numeric observable: the value carried by each state of `var`.
  static StateFunction of_states(std::string name, const Variable& var, std::vector<double> values) {
    return StateFunction(std::move(name), {var}, std::move(values));
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  std::span<const double> values() const noexcept { return values_; }

  std::vector<std::string> variable_names() const {
    std::vector<std::string> out;
    for (const auto& v : variables_) out.push_back(v.name());
    return out;
  }

  double operator()(const Assignment& a) const {
    const auto strides = detail::strides_of(variables_);
    std::size_t lin = 0;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      auto it = a.find(variables_[i].name());
      if (it == a.end())
        throw ScopeError("function '" + name_ + "' needs a value for '" + variables_[i].name() + "'");
      lin += strides[i] * variables_[i].state_index(it->second);
    }
    return values_[lin];
  }

 private:
  std::string name_;
  std::vector<Variable> variables_;
  std::vector<double> values_;
};

/// E[F | given] = sum_x F(x) P(x | given). Without `given`, dist is normalized.
inline double expectation(const Factor& dist, const StateFunction& func,
                          const std::optional<std::vector<EventSet>>& given = std::nullopt) {
  for (const auto& v : func.variables())
    if (!(dist.variable(v.name()) == v)) throw DomainMismatchError(v.name());
  const Factor p = detail::posterior(dist, given.value_or(std::vector<EventSet>{}), func.variable_names());
  double e = 0.0;
  for (std::size_t lin = 0; lin < p.size(); ++lin) e += func.values()[lin] * p[lin];
  return e;
}

}  // namespace pbn
