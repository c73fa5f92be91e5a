#include <gtest/gtest.h>

#include <algorithm>

#include "pbn/bayesnet.hpp"
#include "pbn/ci_lab.hpp"
#include "util.hpp"

using namespace pbn;

namespace {

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

BayesianNetwork chain_declared_backwards() {
  BayesianNetwork net("chain");
  for (const char* n : {"Z", "Y", "X"}) net.add_variable(testutil::var(n, 2));
  net.add_edge("X", "Y");
  net.add_edge("Y", "Z");
  net.set_cpt("X", {0.4, 0.6});
  net.set_cpt("Y", {0.9, 0.1, 0.3, 0.7});
  net.set_cpt("Z", {0.2, 0.8, 0.5, 0.5});
  return net;
}

}  // namespace

TEST(StudentNetwork, ValidWithElevenRows) {
  const auto r = validate_network(student_network());
  EXPECT_TRUE(r.valid());
  EXPECT_EQ(r.node_count, 5u);
  EXPECT_EQ(r.rows_checked, 11u);
}

TEST(StudentNetwork, CptLookups) {
  const auto net = student_network();
  EXPECT_DOUBLE_EQ(net.cpt("S").at({{"I", "i0"}, {"S", "s1"}}), 0.05);
  EXPECT_DOUBLE_EQ(net.cpt("G").at({{"I", "i1"}, {"D", "d1"}, {"G", "g1"}}), 0.5);
  EXPECT_DOUBLE_EQ(net.cpt("L").at({{"G", "g1"}, {"L", "l1"}}), 0.9);
  EXPECT_EQ(net.cpt("G").variable_names(), (std::vector<std::string>{"I", "D", "G"}));
}

TEST(Validate, CycleAndAcyclicExtraEdge) {
  auto looped = student_network();
  looped.add_edge("L", "D");
  looped.set_cpt("D", {0.6, 0.4, 0.6, 0.4});
  // D -> G -> L -> D.
  const auto r1 = validate_network(looped);
  ASSERT_FALSE(r1.valid());
  EXPECT_EQ(r1.violations.front().kind, ViolationKind::cycle);

  auto bad = student_network();
  bad.add_edge("G", "I");
  bad.set_cpt("I", {0.7, 0.3, 0.7, 0.3, 0.7, 0.3});
  const auto r2 = validate_network(bad);
  ASSERT_FALSE(r2.valid());
  const auto& v = r2.violations.front();
  EXPECT_EQ(v.kind, ViolationKind::cycle);
  EXPECT_EQ(sorted(v.cycle), (std::vector<std::string>{"G", "I"}));
  EXPECT_THROW(topological_order(bad), CycleError);
  EXPECT_THROW(joint_distribution(bad), ValidationError);
}

TEST(Validate, RowNormalizationExcess) {
  BayesianNetwork net("one");
  net.add_variable(testutil::var("A", 2));
  net.set_cpt("A", {0.5, 0.6});
  const auto r = validate_network(net);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, ViolationKind::row_normalization);
  EXPECT_EQ(r.violations[0].node, "A");
  EXPECT_NEAR(r.violations[0].excess, 0.1, 1e-12);
}

TEST(Validate, MissingCpt) {
  BayesianNetwork net("one");
  net.add_variable(testutil::var("A", 2));
  const auto r = validate_network(net);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, ViolationKind::missing_cpt);
}

TEST(Joint, StudentCells) {
  const Factor j = joint_distribution(student_network());
  EXPECT_EQ(j.size(), 48u);
  EXPECT_NEAR(j.total(), 1.0, 1e-9);
  EXPECT_NEAR(j.at({{"D", "d0"}, {"I", "i1"}, {"G", "g1"}, {"S", "s1"}, {"L", "l1"}}), 0.11664, 1e-12);
  const Factor is = joint_distribution(intelligence_sat_network());
  EXPECT_NEAR(is.at({{"I", "i0"}, {"S", "s0"}}), 0.665, 1e-12);
  EXPECT_NEAR(is.at({{"I", "i1"}, {"S", "s1"}}), 0.24, 1e-12);
}

TEST(Topological, Orders) {
  EXPECT_EQ(topological_order(student_network()), (std::vector<std::string>{"D", "I", "G", "S", "L"}));
  EXPECT_EQ(topological_order(chain_declared_backwards()), (std::vector<std::string>{"X", "Y", "Z"}));
  BayesianNetwork single("s");
  single.add_variable(testutil::var("A", 2));
  EXPECT_EQ(topological_order(single), (std::vector<std::string>{"A"}));
}

TEST(LocalIndependencies, StudentMatchesTextbookList) {
  std::vector<CIStatement> singles;
  for (const auto& s : local_independencies(student_network()))
    for (const auto& d : s.decompose()) singles.push_back(d);
  const std::vector<CIStatement> expected = {
      {{"D"}, {"I"}, {}},           {{"D"}, {"S"}, {}},           {{"I"}, {"D"}, {}},
      {{"G"}, {"S"}, {"D", "I"}},   {{"S"}, {"D"}, {"I"}},        {{"S"}, {"G"}, {"I"}},
      {{"S"}, {"L"}, {"I"}},        {{"L"}, {"I"}, {"G"}},        {{"L"}, {"D"}, {"G"}},
      {{"L"}, {"S"}, {"G"}}};
  ASSERT_EQ(singles.size(), expected.size());
  for (const auto& e : expected)
    EXPECT_TRUE(std::any_of(singles.begin(), singles.end(), [&](const CIStatement& s) { return s.equivalent(e); }))
        << e.to_string();
}

TEST(LocalIndependencies, VStructureAndChain) {
  BayesianNetwork v("v");
  for (const char* n : {"D", "I", "G"}) v.add_variable(testutil::var(n, 2));
  v.add_edge("D", "G");
  v.add_edge("I", "G");
  const auto lv = local_independencies(v);
  EXPECT_TRUE(std::any_of(lv.begin(), lv.end(), [](const CIStatement& s) {
    return s.equivalent(CIStatement({"D"}, {"I"}));
  }));

  const auto lc = local_independencies(chain_declared_backwards());
  EXPECT_TRUE(std::any_of(lc.begin(), lc.end(), [](const CIStatement& s) {
    return s.equivalent(CIStatement({"Z"}, {"X"}, {"Y"}));
  }));
}

TEST(ChainRule, StudentGenericVsReduced) {
  const auto net = student_network();
  const auto terms = chain_rule_factorization(net, {"D", "I", "G", "S", "L"});
  ASSERT_EQ(terms.size(), 5u);
  EXPECT_EQ(terms[3].generic, (std::vector<std::string>{"D", "I", "G"}));
  EXPECT_EQ(terms[3].reduced, (std::vector<std::string>{"I"}));
  EXPECT_EQ(terms[4].generic, (std::vector<std::string>{"D", "I", "G", "S"}));
  EXPECT_EQ(terms[4].reduced, (std::vector<std::string>{"G"}));
  EXPECT_THROW(chain_rule_factorization(net, {"D", "I"}), SemanticError);

  const Factor joint = joint_distribution(net);
  EXPECT_LE(max_abs_difference(joint, chain_rule_product(joint, terms, false)), 1e-12);
  EXPECT_LE(max_abs_difference(joint, chain_rule_product(joint, terms, true)), 1e-12);
}

TEST(ChainRule, SingleNodeAndChain) {
  BayesianNetwork single("s");
  single.add_variable(testutil::var("A", 2));
  const auto t = chain_rule_factorization(single, {"A"});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_TRUE(t[0].generic.empty());

  const auto c = chain_rule_factorization(chain_declared_backwards(), {"X", "Y", "Z"});
  EXPECT_EQ(c[2].generic, (std::vector<std::string>{"X", "Y"}));
  EXPECT_EQ(c[2].reduced, (std::vector<std::string>{"Y"}));
}

class RandomNetworks : public ::testing::TestWithParam<int> {};

TEST_P(RandomNetworks, StructuralProperties) {
  const auto net = random_network(static_cast<std::uint64_t>(GetParam()));
  ASSERT_TRUE(validate_network(net).valid());
  const Factor joint = joint_distribution(net);
  EXPECT_NEAR(joint.total(), 1.0, 1e-9);

  const auto order = topological_order(net);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (const auto& p : net.parents(order[i]))
      EXPECT_LT(std::find(order.begin(), order.end(), p) - order.begin(), static_cast<std::ptrdiff_t>(i));

  for (const auto& n : net.names()) {
    if (!net.parents(n).empty()) continue;
    const Factor m = marginal(joint, {n});
    EXPECT_LE(max_abs_difference(m, net.cpt(n)), 1e-12) << n;
  }

  for (const auto& r : verify_local_independencies(net, 1e-9))
    EXPECT_TRUE(r.holds) << r.statement.to_string() << " dev " << r.max_deviation;

  const auto terms = chain_rule_factorization(net, order);
  EXPECT_LE(max_abs_difference(joint, chain_rule_product(joint, terms, true)), 1e-12);
  EXPECT_LE(max_abs_difference(joint, chain_rule_product(joint, terms, false)), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomNetworks, ::testing::Range(0, 100));
