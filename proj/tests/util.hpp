#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pbn/factor.hpp"

namespace testutil {

inline pbn::Variable var(const std::string& name, std::size_t card) {
  std::vector<std::string> states;
  for (std::size_t i = 0; i < card; ++i) states.push_back(name + std::to_string(i));
  return pbn::Variable(name, states);
}

inline pbn::Factor random_factor(std::vector<pbn::Variable> scope, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t n = 1;
  for (const auto& v : scope) n *= v.cardinality();
  std::vector<double> vals(n);
  for (auto& x : vals) x = u(rng);
  return pbn::Factor(std::move(scope), std::move(vals));
}

// I and S from the student model.
inline pbn::Variable I() { return pbn::Variable("I", {"i0", "i1"}); }
inline pbn::Variable S() { return pbn::Variable("S", {"s0", "s1"}); }
inline pbn::Factor p_i() { return pbn::Factor({I()}, {0.7, 0.3}); }
inline pbn::Factor p_s_given_i() { return pbn::Factor({I(), S()}, {0.95, 0.05, 0.2, 0.8}); }
inline pbn::Factor joint_is() { return pbn::factor_product(p_i(), p_s_given_i()); }

}  // namespace testutil
