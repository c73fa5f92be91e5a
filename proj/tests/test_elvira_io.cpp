#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "pbn/elvira_io.hpp"
#include "pbn/inference.hpp"
#include "util.hpp"

using namespace pbn;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(PBN_TEST_DATA) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double joint_gap(const BayesianNetwork& a, const BayesianNetwork& b) {
  return max_abs_difference(joint_distribution(a), joint_distribution(b));
}

const char* kTiny = R"(bnet "t" {
node A (finite-states) { states = (a0 a1); }
node B (finite-states) { states = (b0 b1 b2); }
link A B;
relation A { values = table (0.5 0.5); }
relation B { values = table (0.2 0.3 0.5 0.1 0.1 0.8); }
})";

template <class E>
std::string error_of(std::string_view text) {
  try {
    parse_elvira(text);
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST(Elvira, StudentFixtureFile) {
  std::vector<std::string> warnings;
  const auto net = parse_elvira(fixture("student.elv"), &warnings);
  EXPECT_EQ(net.names(), student_network().names());
  EXPECT_EQ(net.parents("G"), (std::vector<std::string>{"I", "D"}));
  EXPECT_LE(joint_gap(net, student_network()), 1e-12);
  EXPECT_FALSE(warnings.empty());
  EXPECT_NE(warnings.front().find("skipped"), std::string::npos);
}

TEST(Elvira, TinyDocument) {
  const auto net = parse_elvira(kTiny);
  EXPECT_EQ(net.name(), "t");
  EXPECT_DOUBLE_EQ(net.cpt("B").at({{"A", "a1"}, {"B", "b2"}}), 0.8);
}

TEST(Elvira, SyntaxErrorsCarryLineAndColumn) {
  try {
    parse_elvira("bnet \"x\" {\n  node A (finite-states) {\n    states = (a0 a1)\n  }\n}");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(e.column(), 3u);
  }
  EXPECT_THROW(parse_elvira("bnet x {}"), SyntaxError);
  EXPECT_THROW(parse_elvira("bnet \"x\" { bogus = 1; }"), SyntaxError);
  EXPECT_THROW(parse_elvira("bnet \"x\" { node A (finite-states) { states = (a0); } } extra"), SyntaxError);
  EXPECT_THROW(parse_elvira("bnet \"x"), SyntaxError);
}

TEST(Elvira, SemanticErrorsNameTheNode) {
  std::string five = kTiny;
  five.replace(five.find("0.2 0.3 0.5 0.1 0.1 0.8"), 23, "0.2 0.3 0.5 0.1 0.9");
  EXPECT_NE(error_of<SemanticError>(five).find("'B'"), std::string::npos);

  std::string missing = kTiny;
  missing.erase(missing.find("relation B"), missing.find("}\n}") - missing.find("relation B") + 2);
  const std::string m = error_of<SemanticError>(missing);
  EXPECT_NE(m.find("'B'"), std::string::npos) << m;
  EXPECT_NE(m.find("CPT"), std::string::npos) << m;

  std::string link = kTiny;
  link.replace(link.find("link A B"), 8, "link A C");
  EXPECT_NE(error_of<SemanticError>(link).find("'C'"), std::string::npos);

  std::string off = kTiny;
  off.replace(off.find("0.5 0.5"), 7, "0.5 0.6");
  EXPECT_NE(error_of<SemanticError>(off).find("'A'"), std::string::npos);

  std::string cyc = kTiny;
  cyc.replace(cyc.find("link A B;"), 9, "link A B; link B A;");
  cyc.replace(cyc.find("(0.5 0.5)"), 9, "(0.5 0.5 0.5 0.5 0.5 0.5)");
  EXPECT_THROW(parse_elvira(cyc), ValidationError);
}

TEST(Elvira, SmallDefectsRenormalizeWithWarning) {
  std::string nudged = kTiny;
  nudged.replace(nudged.find("0.5 0.5"), 7, "0.5 0.5000004");
  std::vector<std::string> warnings;
  const auto net = parse_elvira(nudged, &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_NEAR(net.cpt("A").total(), 1.0, 1e-15);
}

TEST(Elvira, WriterIsDeterministicAndOrdered) {
  const auto net = student_network();
  const std::string a = write_elvira(net), b = write_elvira(net);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("states = (g1 g2 g3);"), std::string::npos);
  EXPECT_NE(a.find("0.300000 0.400000 0.300000"), std::string::npos);

  BayesianNetwork single("single");
  single.add_variable(testutil::var("A", 2));
  single.set_cpt("A", {0.25, 0.75});
  const std::string s = write_elvira(single);
  EXPECT_EQ(s,
            "// Bayesian network, Elvira format\n"
            "bnet \"single\" {\n\nnode A (finite-states) {\n  states = (A0 A1);\n}\n\n"
            "\nrelation A {\n  values = table (0.250000 0.750000);\n}\n}\n");
  EXPECT_LE(joint_gap(parse_elvira(s), single), 1e-12);
}

TEST(Elvira, RowsPrintToExactlyOne) {
  BayesianNetwork net("thirds");
  net.add_variable(testutil::var("A", 3));
  net.set_cpt("A", {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const std::string s = write_elvira(net);
  EXPECT_NE(s.find("0.333334 0.333333 0.333333"), std::string::npos) << s;
  std::vector<std::string> warnings;
  parse_elvira(s, &warnings);
  EXPECT_TRUE(warnings.empty());
}

TEST(Elvira, StudentRoundTripReproducesRegressions) {
  const auto net = parse_elvira(write_elvira(student_network()));
  auto p = [&](std::vector<std::string> t, std::vector<EventSet> ev) {
    return query(net, {std::move(t), std::move(ev), Method::variable_elimination, std::nullopt});
  };
  EXPECT_NEAR(p({"G"}, {})[0], 0.3620, 5e-4);
  EXPECT_NEAR(p({"L"}, {})[1], 0.502, 5e-4);
  EXPECT_NEAR(p({"I"}, {EventSet::point("G", "g3")})[1], 0.079, 5e-4);
  EXPECT_NEAR(p({"L"}, {EventSet::point("I", "i0"), EventSet::point("D", "d0")})[1], 0.513, 5e-4);
  EXPECT_NEAR(p({"G"}, {EventSet::point("I", "i0")})[2], 0.46, 5e-4);
  EXPECT_NEAR(p({"L"}, {EventSet::point("I", "i0")})[1], 0.389, 5e-4);
}

TEST(Native, StudentBitIdentical) {
  const auto net = student_network();
  const std::string text = write_native(net);
  const auto back = parse_native(text);
  EXPECT_EQ(back.names(), net.names());
  for (const auto& n : net.names()) {
    ASSERT_EQ(back.parents(n), net.parents(n));
    const auto a = net.cpt(n).values(), b = back.cpt(n).values();
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
  EXPECT_EQ(write_native(back), text);
}

TEST(Native, SchemaErrorsHavePaths) {
  auto err = [](const std::string& text) {
    try {
      parse_native(text);
    } catch (const SchemaError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  std::string doc = write_native(student_network());
  std::string no_cpt = doc;
  const auto pos = no_cpt.find("\"L\": [");
  no_cpt.erase(no_cpt.rfind(',', pos), no_cpt.find(']', pos) - no_cpt.rfind(',', pos) + 1);
  EXPECT_EQ(err(no_cpt), "/cpts/L");
  EXPECT_EQ(err("[]"), "/");
  EXPECT_EQ(err(R"({"name": "x", "nodes": 3, "edges": [], "cpts": {}})"), "/nodes");
  EXPECT_EQ(err(R"({"name": "x", "nodes": [{"name": "A", "states": ["a", 1]}], "edges": [], "cpts": {}})"),
            "/nodes/0/states");
  EXPECT_EQ(err(R"({"name": "x", "nodes": [{"name": "A", "states": ["a"]}], "edges": [["A", "B"]], "cpts": {"A": [1]}})"),
            "/edges/0");
  EXPECT_EQ(err(R"({"name": "x", "nodes": [{"name": "A", "states": ["a"]}], "edges": [], "cpts": {"A": ["1"]}})"),
            "/cpts/A");
  EXPECT_THROW(parse_native("{\"name\": "), SyntaxError);
}

TEST(Formats, ComposedConversion) {
  const auto net = parse_elvira(fixture("student.elv"));
  const auto via_native = parse_native(write_native(net));
  const auto back = parse_elvira(write_elvira(via_native));
  EXPECT_LE(joint_gap(back, net), 1e-6);
  EXPECT_THROW(parse_network("  {"), SyntaxError);
  EXPECT_EQ(parse_network(write_native(net)).name(), "Student");
  EXPECT_EQ(parse_network(write_elvira(net)).name(), "Student");
}

class RandomRoundTrip : public ::testing::TestWithParam<int> {};

TEST_P(RandomRoundTrip, JointFidelity) {
  const auto net = random_network(static_cast<std::uint64_t>(GetParam()) + 1000);
  EXPECT_LE(joint_gap(parse_elvira(write_elvira(net)), net), 1e-6);
  const Factor a = joint_distribution(net), b = joint_distribution(parse_native(write_native(net)));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomRoundTrip, ::testing::Range(0, 100));

// Every input must yield a network or a pbn::Error, never anything else.
TEST(Fuzz, ParsersNeverCrash) {
  std::mt19937_64 rng(99);
  const std::string elv = write_elvira(student_network()), nat = write_native(student_network());
  const std::string alphabet = "bnet node link relation states values table finite-states(){};=,\"//\n 0.5 1e9 -x";
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 3000; ++i) {
    std::string input;
    switch (i % 3) {
      case 0: {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 4096)(rng);
        for (std::size_t k = 0; k < n; ++k) input += static_cast<char>(byte(rng));
        break;
      }
      case 1: {
        input = (i % 2 ? elv : nat);
        const int edits = 1 + i % 8;
        for (int k = 0; k < edits && !input.empty(); ++k) {
          const std::size_t at = std::uniform_int_distribution<std::size_t>(0, input.size() - 1)(rng);
          input[at] = alphabet[static_cast<std::size_t>(byte(rng)) % alphabet.size()];
        }
        break;
      }
      default: {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 300)(rng);
        for (std::size_t k = 0; k < n; ++k) input += alphabet[static_cast<std::size_t>(byte(rng)) % alphabet.size()];
      }
    }
    for (auto* parse : {&parse_elvira, &parse_native, &parse_network}) {
      try {
        parse(input, nullptr);
      } catch (const Error&) {
      }
    }
  }
}
