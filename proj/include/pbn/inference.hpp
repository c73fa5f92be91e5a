#pragma once

// Exact posterior queries, two ways: enumeration over the full joint (the
// reference oracle) and variable elimination, where each sum-out is one
// unit-operator insertion over the eliminated variable's states.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pbn/bayesnet.hpp"
#include "pbn/error.hpp"
#include "pbn/factor.hpp"

namespace pbn {

enum class Method { enumeration, variable_elimination };

struct InferenceTask {
  std::vector<std::string> targets;
  std::vector<EventSet> evidence;
  Method method = Method::variable_elimination;
  std::optional<std::vector<std::string>> elimination_hint;
};

namespace detail {

inline void check_names(const BayesianNetwork& net, const std::vector<std::string>& targets,
                        const std::vector<EventSet>& evidence) {
  std::set<std::string> seen;
  for (const auto& t : targets) {
    net.variable(t);
    if (!seen.insert(t).second) throw ScopeError("target '" + t + "' listed twice");
  }
  for (const auto& ev : evidence) {
    const Variable& v = net.variable(ev.variable());
    for (const auto& s : ev.states()) v.state_index(s);
  }
}

inline void check_task(const BayesianNetwork& net, const InferenceTask& task) {
  check_names(net, task.targets, task.evidence);
  for (const auto& ev : task.evidence)
    if (std::find(task.targets.begin(), task.targets.end(), ev.variable()) != task.targets.end())
      throw ScopeError("target '" + ev.variable() + "' also appears as evidence");
}

}  // namespace detail

/// Greedy min-degree order over the moral graph for every non-target node.
/// Ties go to the lexicographically smallest name.
inline std::vector<std::string> elimination_order(const BayesianNetwork& net,
                                                  const std::vector<std::string>& targets) {
  for (const auto& t : targets) net.variable(t);
  std::map<std::string, std::set<std::string>> adj;
  for (const auto& n : net.names()) {
    adj[n];
    const auto& ps = net.parents(n);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      adj[n].insert(ps[i]);
      adj[ps[i]].insert(n);
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        adj[ps[i]].insert(ps[j]);
        adj[ps[j]].insert(ps[i]);
      }
    }
  }
  std::set<std::string> todo;
  for (const auto& n : net.names())
    if (std::find(targets.begin(), targets.end(), n) == targets.end()) todo.insert(n);

  std::vector<std::string> order;
  while (!todo.empty()) {
    // std::set iterates by name, so the first minimum found wins ties.
    std::string best;
    std::size_t best_degree = SIZE_MAX;
    for (const auto& n : todo)
      if (adj[n].size() < best_degree) { best = n; best_degree = adj[n].size(); }
    const auto nbrs = adj[best];
    for (const auto& a : nbrs) {
      adj[a].erase(best);
      for (const auto& b : nbrs)
        if (a != b) adj[a].insert(b);
    }
    adj.erase(best);
    todo.erase(best);
    order.push_back(best);
  }
  return order;
}

inline std::vector<std::string> elimination_order(const BayesianNetwork& net, const InferenceTask& task) {
  return elimination_order(net, task.targets);
}

namespace detail {

inline Factor enumerate_posterior(const BayesianNetwork& net, const std::vector<EventSet>& evidence,
                                  const std::vector<std::string>& targets) {
  return posterior(joint_distribution(net), evidence, targets);
}

inline Factor eliminate_posterior(const BayesianNetwork& net, const std::vector<EventSet>& evidence,
                                  const std::vector<std::string>& targets,
                                  const std::optional<std::vector<std::string>>& hint) {
  auto report = validate_network(net);
  if (!report.valid()) throw ValidationError(std::move(report));

  std::vector<std::string> order;
  if (hint) {
    auto expected = elimination_order(net, targets);
    std::set<std::string> want(expected.begin(), expected.end()), got(hint->begin(), hint->end());
    if (want != got || got.size() != hint->size())
      throw ScopeError("elimination order must list every non-target variable exactly once");
    order = *hint;
  } else {
    order = elimination_order(net, targets);
  }

  std::vector<Factor> pool;
  for (const auto& name : net.names()) {
    const Factor& cpt = net.cpt(name);
    std::vector<EventSet> local;
    for (const auto& ev : evidence)
      if (cpt.has_variable(ev.variable())) local.push_back(ev);
    pool.push_back(local.empty() ? cpt : restrict(cpt, local));
  }

  for (const auto& var : order) {
    Factor merged;
    std::vector<Factor> rest;
    bool touched = false;
    for (auto& f : pool) {
      if (f.has_variable(var)) {
        merged = factor_product(merged, f);
        touched = true;
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (touched) rest.push_back(sum_out(merged, {var}));
    pool = std::move(rest);
  }

  Factor result;
  for (const auto& f : pool) result = factor_product(result, f);
  if (!(result.total() > 0.0)) throw ImpossibleEvidenceError();
  return normalize(marginal(result, targets));
}

}  // namespace detail

/// Reference oracle: restrict the full joint, sum out non-targets, normalize.
inline Factor query_enumeration(const BayesianNetwork& net, const InferenceTask& task) {
  detail::check_task(net, task);
  return detail::enumerate_posterior(net, task.evidence, task.targets);
}

inline Factor query_variable_elimination(const BayesianNetwork& net, const InferenceTask& task) {
  detail::check_task(net, task);
  return detail::eliminate_posterior(net, task.evidence, task.targets, task.elimination_hint);
}

inline Factor query(const BayesianNetwork& net, const InferenceTask& task) {
  return task.method == Method::enumeration ? query_enumeration(net, task)
                                            : query_variable_elimination(net, task);
}

}  // namespace pbn
