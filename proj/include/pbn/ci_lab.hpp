#pragma once

// Numerical conditional-independence checks and an implication harness for
// the semigraphoid axioms (plus Intersection on positive distributions).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pbn/bayesnet.hpp"
#include "pbn/error.hpp"
#include "pbn/factor.hpp"

namespace pbn {

inline constexpr double kDefaultCITolerance = 1e-9;

struct CIReport {
  CIStatement statement;
  bool holds = false;
  double max_deviation = 0.0;  // max |P(x,y|z) - P(x|z)P(y|z)| over P(z) > 0
  Assignment witness;          // worst cell
  double tolerance = kDefaultCITolerance;
};

namespace detail {

inline void check_disjoint_in_scope(const Factor& dist,
                                    std::initializer_list<const std::vector<std::string>*> sets) {
  std::set<std::string> seen;
  for (const auto* s : sets)
    for (const auto& n : *s) {
      if (!dist.has_variable(n)) throw ScopeError("variable '" + n + "' is not in the distribution");
      if (!seen.insert(n).second) throw ScopeError("variable '" + n + "' appears in two sets");
    }
}

struct Deviation {
  double value = 0.0;
  Assignment witness;
};

/// Empty left or right sets are trivially independent. Every marginal keeps
/// dist's layout order, so (X,Y) and (Y,X) run the same arithmetic.
inline Deviation ci_deviation(const Factor& dist, const std::vector<std::string>& left,
                              const std::vector<std::string>& right,
                              const std::vector<std::string>& given) {
  check_disjoint_in_scope(dist, {&left, &right, &given});
  if (left.empty() || right.empty()) return {};
  std::vector<std::string> others;
  for (const auto& v : dist.scope()) {
    const auto& n = v.name();
    auto in = [&](const std::vector<std::string>& s) { return std::find(s.begin(), s.end(), n) != s.end(); };
    if (!in(left) && !in(right) && !in(given)) others.push_back(n);
  }
  const Factor m = normalize(sum_out(dist, others));
  std::vector<std::string> both = left;
  both.insert(both.end(), right.begin(), right.end());
  const Factor pz = sum_out(m, both);
  const Factor pxz = sum_out(m, right);
  const Factor pyz = sum_out(m, left);

  Deviation worst;
  std::size_t worst_cell = 0;
  bool any = false;
  const std::vector<std::vector<std::size_t>> strides = {
      projected_strides(m.scope(), pz.scope()), projected_strides(m.scope(), pxz.scope()),
      projected_strides(m.scope(), pyz.scope())};
  odometer(m.scope(), strides, [&](std::size_t lin, std::span<const std::size_t> idx) {
    const double z = pz[idx[0]];
    if (!(z > 0.0)) return;
    const double dev = std::abs(m[lin] / z - (pxz[idx[1]] / z) * (pyz[idx[2]] / z));
    if (!any || dev > worst.value) {
      worst.value = dev;
      worst_cell = lin;
      any = true;
    }
  });
  if (any) worst.witness = m.assignment_of(worst_cell);
  return worst;
}

inline std::vector<std::string> keys_of(const Assignment& a) {
  std::vector<std::string> out;
  for (const auto& [k, v] : a) out.push_back(k);
  return out;
}

inline Assignment merge(Assignment a, const Assignment& b) {
  a.insert(b.begin(), b.end());
  return a;
}

}  // namespace detail

/// P |= (x ⊥ y | z): P(x | y, z) = P(x | z) within tol, or P(y, z) = 0.
inline bool check_event_independence(const Factor& dist, const Assignment& x, const Assignment& y,
                                     const Assignment& z = {}, double tol = kDefaultCITolerance) {
  const auto kx = detail::keys_of(x), ky = detail::keys_of(y), kz = detail::keys_of(z);
  detail::check_disjoint_in_scope(dist, {&kx, &ky, &kz});
  auto mass = [&](const Assignment& a) { return restrict(dist, to_events(a)).total(); };
  const double pyz = mass(detail::merge(y, z));
  if (!(pyz > 0.0)) return true;
  const double p_x_given_yz = mass(detail::merge(detail::merge(x, y), z)) / pyz;
  const double p_x_given_z = mass(detail::merge(x, z)) / mass(z);
  return std::abs(p_x_given_yz - p_x_given_z) <= tol;
}

/// Exhaustive check of P(X, Y | Z) = P(X | Z) P(Y | Z).
inline CIReport check_variable_ci(const Factor& dist, const CIStatement& stmt,
                                  double tol = kDefaultCITolerance) {
  auto dev = detail::ci_deviation(dist, stmt.left(), stmt.right(), stmt.given());
  return CIReport{stmt, dev.value <= tol, dev.value, std::move(dev.witness), tol};
}

/// Size cap for random_distribution.
inline constexpr std::size_t kMaxRandomCells = std::size_t{1} << 16;

/// Cells uniform(0,1), or uniform(1e-3,1) when `positive`, then normalized.
inline Factor random_distribution(const std::vector<Variable>& vars, std::uint64_t seed, bool positive) {
  std::size_t n = 1;
  for (const auto& v : vars) {
    if (v.cardinality() > kMaxRandomCells / n)
      throw ResourceError("random distribution larger than " + std::to_string(kMaxRandomCells) + " cells");
    n *= v.cardinality();
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cell(positive ? 1e-3 : 0.0, 1.0);
  std::vector<double> values(n);
  for (auto& x : values) x = cell(rng);
  return normalize(Factor(vars, std::move(values)));
}

/// Split one seed into independent per-trial seeds (splitmix64 finalizer).
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct AxiomPartition {
  std::vector<Variable> x, y, z, w;

  std::vector<Variable> all() const {
    std::vector<Variable> out = x;
    for (const auto* s : {&y, &z, &w}) out.insert(out.end(), s->begin(), s->end());
    return out;
  }
};

inline std::vector<std::string> names_of(const std::vector<Variable>& vars) {
  std::vector<std::string> out;
  for (const auto& v : vars) out.push_back(v.name());
  return out;
}

/// A distribution of the form f(x, z) g(y, w, z), which satisfies
/// X ⊥ {Y, W} | Z by construction and therefore every axiom antecedent.
inline Factor factorized_distribution(const AxiomPartition& p, std::uint64_t seed, bool positive) {
  std::vector<Variable> xz = p.x, ywz = p.y;
  xz.insert(xz.end(), p.z.begin(), p.z.end());
  ywz.insert(ywz.end(), p.w.begin(), p.w.end());
  ywz.insert(ywz.end(), p.z.begin(), p.z.end());
  const Factor f = random_distribution(xz, trial_seed(seed, 0), positive);
  const Factor g = random_distribution(ywz, trial_seed(seed, 1), positive);
  return normalize(reorder(factor_product(f, g), names_of(p.all())));
}

enum class Axiom { symmetry, decomposition, contraction, weak_union, intersection };
inline constexpr std::array<Axiom, 5> kAllAxioms = {Axiom::symmetry, Axiom::decomposition,
                                                    Axiom::contraction, Axiom::weak_union,
                                                    Axiom::intersection};

inline const char* axiom_name(Axiom a) {
  switch (a) {
    case Axiom::symmetry: return "symmetry";
    case Axiom::decomposition: return "decomposition";
    case Axiom::contraction: return "contraction";
    case Axiom::weak_union: return "weak union";
    case Axiom::intersection: return "intersection";
  }
  return "?";
}

enum class AxiomStatus { vacuous, satisfied, violated, positivity_counterexample };

struct AxiomOutcome {
  Axiom axiom;
  AxiomStatus status;
  double antecedent_deviation;  // worst antecedent statement
  double consequent_deviation;  // worst consequent statement
};

struct AxiomReport {
  bool positive = false;
  std::vector<AxiomOutcome> outcomes;

  const AxiomOutcome& operator[](Axiom a) const {
    return *std::find_if(outcomes.begin(), outcomes.end(), [&](const auto& o) { return o.axiom == a; });
  }
  std::size_t violations() const {
    return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) {
      return o.status == AxiomStatus::violated;
    }));
  }
};

/// Tests each axiom as an implication on `dist`. Antecedents are judged at
/// `antecedent_tol` (defaults to `tol`), consequents at `tol`. Intersection
/// failures on non-positive distributions are positivity counterexamples.
inline AxiomReport axiom_suite(const Factor& dist, const AxiomPartition& part, double tol,
                               double antecedent_tol = -1.0) {
  if (antecedent_tol < 0.0) antecedent_tol = tol;
  const auto X = names_of(part.x), Y = names_of(part.y), Z = names_of(part.z), W = names_of(part.w);
  if (X.empty() || Y.empty()) throw SemanticError("axiom partition needs nonempty X and Y");
  detail::check_disjoint_in_scope(dist, {&X, &Y, &Z, &W});

  auto cat = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  auto dev = [&](const std::vector<std::string>& l, const std::vector<std::string>& r,
                 const std::vector<std::string>& g) { return detail::ci_deviation(dist, l, r, g).value; };

  const auto YW = cat(Y, W), ZW = cat(Z, W), YZ = cat(Y, Z);
  const double x_yw_z = dev(X, YW, Z);
  const double x_y_z = dev(X, Y, Z);

  AxiomReport rep;
  rep.positive = std::all_of(dist.values().begin(), dist.values().end(), [](double v) { return v > 0.0; });

  auto judge = [&](Axiom a, double ante, double cons) {
    AxiomStatus s;
    if (ante > antecedent_tol) s = AxiomStatus::vacuous;
    else if (cons <= tol) s = AxiomStatus::satisfied;
    else if (a == Axiom::intersection && !rep.positive) s = AxiomStatus::positivity_counterexample;
    else s = AxiomStatus::violated;
    rep.outcomes.push_back({a, s, ante, cons});
  };

  judge(Axiom::symmetry, x_y_z, dev(Y, X, Z));
  judge(Axiom::decomposition, x_yw_z, x_y_z);
  judge(Axiom::contraction, std::max(x_y_z, dev(X, W, YZ)), x_yw_z);
  // Weak union, together with the companion conclusion X ⊥ W | Z.
  judge(Axiom::weak_union, x_yw_z, std::max(dev(X, Y, ZW), dev(X, W, Z)));
  judge(Axiom::intersection, std::max(dev(X, Y, ZW), dev(X, W, YZ)), x_yw_z);
  return rep;
}

struct AxiomTally {
  std::size_t non_vacuous = 0;
  std::size_t vacuous = 0;
  std::size_t violations = 0;
  std::size_t positivity_counterexamples = 0;
};

struct AxiomTrialConfig {
  std::size_t num_vars = 4;
  std::size_t cardinality = 2;
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  bool positive = true;
  double tol = kDefaultCITolerance;
};

struct AxiomTrialSummary {
  AxiomTrialConfig config;
  std::size_t distributions = 0;
  std::array<AxiomTally, 5> tallies{};

  const AxiomTally& operator[](Axiom a) const { return tallies[static_cast<std::size_t>(a)]; }
  std::size_t total_violations() const {
    std::size_t n = 0;
    for (const auto& t : tallies) n += t.violations;
    return n;
  }
};

/// V0 -> X, V1 -> Y, then V2, V3, ... alternate between Z and W.
inline AxiomPartition default_partition(std::size_t num_vars, std::size_t cardinality) {
  if (num_vars < 2) throw SemanticError("axiom trials need at least 2 variables");
  if (cardinality < 1) throw SemanticError("cardinality must be at least 1");
  std::vector<std::string> states;
  for (std::size_t s = 0; s < cardinality; ++s) states.push_back("v" + std::to_string(s));
  AxiomPartition p;
  for (std::size_t i = 0; i < num_vars; ++i) {
    Variable v("V" + std::to_string(i), states);
    if (i == 0) p.x.push_back(v);
    else if (i == 1) p.y.push_back(v);
    else if (i % 2 == 0) p.z.push_back(v);
    else p.w.push_back(v);
  }
  return p;
}

/// Each trial checks one unconstrained random distribution and one built to
/// satisfy every antecedent. Trials are seeded independently.
inline AxiomTrialSummary run_axiom_trials(const AxiomTrialConfig& cfg) {
  const AxiomPartition part = default_partition(cfg.num_vars, cfg.cardinality);
  AxiomTrialSummary sum{cfg, 0, {}};
  auto tally = [&](const AxiomReport& rep) {
    ++sum.distributions;
    for (const auto& o : rep.outcomes) {
      auto& t = sum.tallies[static_cast<std::size_t>(o.axiom)];
      switch (o.status) {
        case AxiomStatus::vacuous: ++t.vacuous; break;
        case AxiomStatus::satisfied: ++t.non_vacuous; break;
        case AxiomStatus::violated: ++t.non_vacuous; ++t.violations; break;
        case AxiomStatus::positivity_counterexample: ++t.non_vacuous; ++t.positivity_counterexamples; break;
      }
    }
  };
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const std::uint64_t s = trial_seed(cfg.seed, t);
    tally(axiom_suite(random_distribution(part.all(), s, cfg.positive), part, cfg.tol));
    tally(axiom_suite(factorized_distribution(part, s, cfg.positive), part, cfg.tol));
  }
  return sum;
}

/// X = Y = W uniform over two states, Z a single-state variable. Intersection's
/// antecedents hold but its consequent fails: the distribution is not positive.
inline std::pair<Factor, AxiomPartition> copy_distribution() {
  AxiomPartition p;
  p.x.emplace_back("X", std::vector<std::string>{"x0", "x1"});
  p.y.emplace_back("Y", std::vector<std::string>{"y0", "y1"});
  p.z.emplace_back("Z", std::vector<std::string>{"z0"});
  p.w.emplace_back("W", std::vector<std::string>{"w0", "w1"});
  // Layout (X, Y, Z, W), W fastest: mass on x=y=w.
  std::vector<double> v(8, 0.0);
  v[0] = 0.5;  // x0 y0 z0 w0
  v[7] = 0.5;  // x1 y1 z0 w1
  return {Factor(p.all(), std::move(v)), p};
}

/// Checks every local independence of `net` numerically in its joint.
inline std::vector<CIReport> verify_local_independencies(const BayesianNetwork& net,
                                                         double tol = kDefaultCITolerance) {
  const Factor joint = joint_distribution(net);
  std::vector<CIReport> out;
  for (const auto& stmt : local_independencies(net)) out.push_back(check_variable_ci(joint, stmt, tol));
  return out;
}

}  // namespace pbn
