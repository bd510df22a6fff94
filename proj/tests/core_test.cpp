#include <gtest/gtest.h>

#include <pdgloss/core.hpp>

#include "test_support.hpp"

using namespace pdgloss;

namespace {

Variable X() { return Variable("X", {"x0", "x1"}); }
Variable Y() { return Variable("Y", {"y0", "y1"}); }

} // namespace

TEST(BuildPdg, MinimalGraph) {
  auto g = build_pdg({X()}, {{"p", Cpd::unconditional(X(), {0.5, 0.5})}});
  EXPECT_EQ(g.variables().size(), 1u);
  EXPECT_EQ(g.edges().size(), 1u);
}

TEST(BuildPdg, RejectsUnnormalizedRow) {
  try {
    Cpd::unconditional(X(), {0.6, 0.6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidCpd);
  }
  EXPECT_THROW(Cpd::unconditional(X(), {1.2, -0.2}), Error);
}

TEST(BuildPdg, RejectsUndeclaredVariable) {
  Variable z("Z", {"z0", "z1"});
  try {
    build_pdg({X()}, {{"p", Cpd::unconditional(z, {0.5, 0.5})}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownVariable);
  }
}

TEST(BuildPdg, RejectsDuplicateLabel) {
  auto p = Cpd::unconditional(X(), {0.5, 0.5});
  try {
    build_pdg({X()}, {{"p", p}, {"p", p}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateLabel);
  }
}

TEST(BuildPdg, EdgesSortedByLabel) {
  auto p = Cpd::unconditional(X(), {0.5, 0.5});
  auto g = build_pdg({X()}, {{"q", p}, {"a", p}, {"m", p}});
  EXPECT_EQ(g.edges()[0].label, "a");
  EXPECT_EQ(g.edges()[2].label, "q");
}

TEST(BuildPdg, StateSpaceCap) {
  VariableList vars;
  for (int i = 0; i < 8; ++i) vars.push_back(Variable::indexed("V" + std::to_string(i), 10));
  try {
    build_pdg(vars, {}, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StateSpaceTooLarge);
  }
}

TEST(Confidence, InfinityOrdering) {
  EXPECT_GT(Confidence::infinite(), Confidence(1e300));
  EXPECT_THROW(Confidence(-1.0), Error);
}

TEST(Cpd, DegeneratePredicate) {
  EXPECT_TRUE(Cpd::point_mass(X(), 1).is_degenerate());
  EXPECT_TRUE(Cpd::function({X()}, {Y()}, {1, 0}).is_degenerate());
  EXPECT_FALSE(Cpd::unconditional(X(), {0.5, 0.5}).is_degenerate());
}

TEST(Marginal, UniformIsSymmetric) {
  auto m = marginal(JointTable::uniform({X(), Y()}), VariableList{X()});
  EXPECT_DOUBLE_EQ(m[0], 0.5);
  EXPECT_DOUBLE_EQ(m[1], 0.5);
}

TEST(Marginal, ColumnSums) {
  JointTable mu({X(), Y()}, {0.1, 0.2, 0.3, 0.4});
  auto m = marginal(mu, VariableList{Y()});
  EXPECT_NEAR(m[0], 0.4, 1e-15);
  EXPECT_NEAR(m[1], 0.6, 1e-15);
}

TEST(Marginal, AllVariablesIsIdentity) {
  JointTable mu({X(), Y()}, {0.1, 0.2, 0.3, 0.4});
  auto m = marginal(mu, VariableList{X(), Y()});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(m[i], mu[i], 1e-15);
  // Reordering the subset transposes the table.
  auto t = marginal(mu, VariableList{Y(), X()});
  EXPECT_NEAR(t[1], 0.3, 1e-15);
  EXPECT_THROW(marginal(mu, std::vector<std::string>{"Q"}), Error);
}

TEST(Conditional, IndependentRowsMatch) {
  JointTable mu({X(), Y()}, {0.15, 0.35, 0.15, 0.35});
  auto c = conditional(mu, {Y()}, {X()});
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_NEAR(c.cpd(r, 0), 0.3, 1e-12);
    EXPECT_NEAR(c.cpd(r, 1), 0.7, 1e-12);
  }
}

TEST(Conditional, NormalizesRow) {
  JointTable mu({X(), Y()}, {0.1, 0.2, 0.3, 0.4});
  auto c = conditional(mu, {Y()}, {X()});
  EXPECT_NEAR(c.cpd(0, 0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(c.cpd(0, 1), 2.0 / 3.0, 1e-12);
}

TEST(Conditional, ZeroMassRowUndefined) {
  JointTable mu({X(), Y()}, {0.5, 0.5, 0.0, 0.0});
  auto c = conditional(mu, {Y()}, {X()});
  EXPECT_TRUE(c.defined[0]);
  EXPECT_FALSE(c.defined[1]);
}

TEST(Pushforward, Examples) {
  JointTable d({X()}, {0.3, 0.7});
  auto id = pushforward(Cpd({X()}, {Y()}, {1, 0, 0, 1}), d);
  EXPECT_NEAR(id[0], 0.3, 1e-15);
  auto collapse = pushforward(Cpd::function({X()}, {Y()}, {0, 0}), d);
  EXPECT_EQ(collapse[0], 1.0);
  auto f = pushforward(Cpd({X()}, {Y()}, {0.8, 0.2, 0.3, 0.7}), JointTable({X()}, {0.5, 0.5}));
  EXPECT_NEAR(f[0], 0.55, 1e-15);
  EXPECT_NEAR(f[1], 0.45, 1e-15);
  EXPECT_THROW(pushforward(Cpd({Y()}, {X()}, {1, 0, 0, 1}), d), Error);
}

TEST(CoreProperties, ConditionalTimesMarginalReconstructs) {
  pdgtest::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Variable z = Variable::indexed("Z", 3);
    VariableList vars{X(), z, Y()};
    auto mu = pdgtest::random_joint(rng, vars);
    auto joint = marginal(mu, VariableList{X(), Y()});
    auto mx = marginal(mu, VariableList{X()});
    auto c = conditional(mu, {Y()}, {X()});
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 2; ++y) EXPECT_NEAR(mx[x] * c.cpd(x, y), joint[x * 2 + y], 1e-12);
    auto push = pushforward(random_cpd(rng, {X()}, {z}), mx);
    double s = 0.0;
    for (double v : push.probs()) s += v;
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
}
