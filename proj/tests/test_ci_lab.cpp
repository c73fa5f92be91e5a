#include <gtest/gtest.h>

#include "pbn/ci_lab.hpp"
#include "util.hpp"

using namespace pbn;

TEST(EventIndependence, StudentExamples) {
  const Factor j = joint_distribution(student_network());
  EXPECT_TRUE(check_event_independence(j, {{"D", "d0"}}, {{"I", "i1"}}));
  EXPECT_FALSE(check_event_independence(j, {{"D", "d1"}}, {{"I", "i1"}}, {{"G", "g1"}}));
}

TEST(EventIndependence, ZeroMassEscape) {
  const Factor f({testutil::var("A", 2), testutil::var("B", 2)}, {0.5, 0.0, 0.5, 0.0});
  EXPECT_TRUE(check_event_independence(f, {{"A", "A0"}}, {{"B", "B1"}}));
}

TEST(VariableCI, StudentStatements) {
  const Factor j = joint_distribution(student_network());
  EXPECT_TRUE(check_variable_ci(j, CIStatement({"G"}, {"S"}, {"D", "I"})).holds);
  EXPECT_TRUE(check_variable_ci(j, CIStatement({"L"}, {"I", "D", "S"}, {"G"})).holds);
  const auto r = check_variable_ci(j, CIStatement({"D"}, {"I"}, {"G"}));
  EXPECT_FALSE(r.holds);
  EXPECT_GT(r.max_deviation, 0.01);
  EXPECT_FALSE(r.witness.empty());
}

TEST(VariableCI, ProductDistribution) {
  const Factor p = factor_product(Factor({testutil::var("X", 3)}, {0.2, 0.3, 0.5}),
                                  Factor({testutil::var("Y", 2)}, {0.6, 0.4}));
  const auto r = check_variable_ci(p, CIStatement({"X"}, {"Y"}));
  EXPECT_TRUE(r.holds);
  EXPECT_LE(r.max_deviation, 1e-15);
}

TEST(VariableCI, ScopeErrors) {
  const Factor j = joint_distribution(student_network());
  EXPECT_THROW(check_variable_ci(j, CIStatement({"Q"}, {"S"})), ScopeError);
}

TEST(RandomDistribution, Contract) {
  const std::vector<Variable> vars{testutil::var("A", 2), testutil::var("B", 3)};
  const Factor p = random_distribution(vars, 1, true);
  for (double v : p.values()) EXPECT_GT(v, 0.0);
  const Factor q = random_distribution(vars, 1, true);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], q[i]);
  const Factor r = random_distribution({testutil::var("A", 2), testutil::var("B", 2), testutil::var("C", 2)}, 2,
                                       false);
  EXPECT_NEAR(r.total(), 1.0, 1e-9);
  std::vector<Variable> big;
  for (int i = 0; i < 17; ++i) big.push_back(testutil::var("V" + std::to_string(i), 2));
  EXPECT_THROW(random_distribution(big, 1, true), ResourceError);
}

TEST(Axioms, SymmetryIsExact) {
  const AxiomPartition part = default_partition(4, 2);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Factor d = random_distribution(part.all(), s, false);
    const CIStatement st(names_of(part.x), names_of(part.y), names_of(part.z));
    EXPECT_LE(std::abs(check_variable_ci(d, st).max_deviation - check_variable_ci(d, st.swapped()).max_deviation),
              1e-15);
  }
}

TEST(Axioms, PositiveTrialsHaveNoViolations) {
  AxiomTrialConfig cfg;
  cfg.trials = 1000;
  const auto s = run_axiom_trials(cfg);
  EXPECT_EQ(s.total_violations(), 0u);
  for (Axiom a : kAllAxioms) EXPECT_GE(s[a].non_vacuous, 500u) << axiom_name(a);
}

TEST(Axioms, DecompositionUnderTightAntecedent) {
  const AxiomPartition part = default_partition(4, 2);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const auto rep = axiom_suite(factorized_distribution(part, t, false), part, 1e-9, 1e-12);
    EXPECT_NE(rep[Axiom::decomposition].status, AxiomStatus::violated);
  }
}

TEST(Axioms, CopyDistributionIsPositivityCounterexample) {
  const auto [dist, part] = copy_distribution();
  const auto rep = axiom_suite(dist, part, 1e-9);
  EXPECT_FALSE(rep.positive);
  EXPECT_EQ(rep[Axiom::intersection].status, AxiomStatus::positivity_counterexample);
  EXPECT_EQ(rep.violations(), 0u);
}

TEST(Axioms, WeakUnionOnFactorizedForm) {
  const AxiomPartition part = default_partition(4, 2);
  const Factor d = factorized_distribution(part, 42, true);
  const auto rep = axiom_suite(d, part, 1e-9);
  EXPECT_EQ(rep[Axiom::weak_union].status, AxiomStatus::satisfied);
}

TEST(Axioms, PartitionOverlapRejected) {
  AxiomPartition part = default_partition(4, 2);
  part.w = part.z;
  EXPECT_THROW(axiom_suite(random_distribution(default_partition(4, 2).all(), 1, true), part, 1e-9), Error);
}

TEST(LocalIndependence, StudentAndVariants) {
  for (const auto& r : verify_local_independencies(student_network())) {
    EXPECT_TRUE(r.holds) << r.statement.to_string();
    EXPECT_LT(r.max_deviation, 1e-12);
  }

  BayesianNetwork naive("naive");
  for (const char* n : {"A", "B", "C"}) {
    naive.add_variable(testutil::var(n, 2));
    naive.set_cpt(n, {0.3, 0.7});
  }
  const auto rn = verify_local_independencies(naive);
  EXPECT_EQ(rn.size(), 3u);
  for (const auto& r : rn) EXPECT_TRUE(r.holds);

  auto flat = student_network();
  flat.set_cpt("S", {0.5, 0.5, 0.5, 0.5});
  for (const auto& r : verify_local_independencies(flat)) EXPECT_TRUE(r.holds);
  EXPECT_TRUE(check_variable_ci(joint_distribution(flat), CIStatement({"S"}, {"D", "I", "G", "L"})).holds);
}
