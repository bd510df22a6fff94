#include <gtest/gtest.h>

#include <cmath>

#include <pdgloss/factor_graph.hpp>

#include "fg_instances.hpp"
#include "test_support.hpp"

using namespace pdgloss;

namespace {

Variable X() { return Variable("X", {"x0", "x1"}); }

WeightedFactorGraph single(std::vector<double> phi, double theta) {
  return WeightedFactorGraph({X()}, {{"J", {X()}, std::move(phi), theta}});
}

} // namespace

TEST(PartitionFunction, SingleFactor) {
  auto flat = partition_function(single({1, 1}, 1.0));
  EXPECT_NEAR(flat.z, 2.0, 1e-15);
  auto r = partition_function(single({1, 3}, 1.0));
  EXPECT_NEAR(r.z, 4.0, 1e-14);
  EXPECT_NEAR(r.log_z, std::log(4.0), 1e-15);
}

TEST(PartitionFunction, OverlappingPairwiseMatchesEnumeration) {
  auto a = Variable::indexed("A", 2), b = Variable::indexed("B", 2), c = Variable::indexed("C", 2);
  WeightedFactorGraph fg({a, b, c}, {{"ab", {a, b}, {1.0, 2.0, 0.5, 3.0}, 1.0}, {"bc", {b, c}, {2.0, 1.0, 1.0, 4.0}, 1.0}});
  // Hand enumeration of all 8 states.
  double ab[2][2] = {{1.0, 2.0}, {0.5, 3.0}}, bc[2][2] = {{2.0, 1.0}, {1.0, 4.0}};
  double z = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) z += ab[i][j] * bc[j][k];
  EXPECT_NEAR(partition_function(fg).z, z, 1e-12);
}

TEST(PartitionFunction, MatchesEnumerationOnRandomGraphs) {
  pdgtest::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto fg = pdgtest::random_factor_graph(rng);
    double z = pdgtest::enumerate_z(fg);
    EXPECT_NEAR(partition_function(fg).log_z, std::log(z), 1e-12);
  }
}

TEST(PartitionFunction, NegativeWeightsAllowed) {
  auto r = partition_function(single({1, 4}, -0.5));
  EXPECT_NEAR(r.z, 1.5, 1e-14);
  EXPECT_THROW(fg_to_pdg(single({1, 4}, -0.5)), Error);
  EXPECT_THROW(partition_function(single({0, 4}, -0.5)), Error);
}

TEST(PartitionFunction, StateSpaceCap) {
  VariableList vars;
  for (int i = 0; i < 6; ++i) vars.push_back(Variable::indexed("V" + std::to_string(i), 10));
  try {
    WeightedFactorGraph(vars, {}, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StateSpaceTooLarge);
  }
}

TEST(FgToPdg, Conversion) {
  auto g = fg_to_pdg(single({1, 3}, 1.0));
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_NEAR(g.edges()[0].cpd(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(g.edges()[0].cpd(0, 1), 0.75, 1e-15);
  EXPECT_EQ(g.edges()[0].beta.value(), 1.0);
  EXPECT_EQ(g.edges()[0].alpha, 1.0);

  auto g2 = fg_to_pdg(single({1, 3}, 2.0));
  EXPECT_EQ(g2.edges()[0].beta.value(), 2.0);
  EXPECT_EQ(g2.edges()[0].alpha, 2.0);
  EXPECT_EQ(g2.edges()[0].cpd, g.edges()[0].cpd);

  Variable y("Y", {"y0", "y1"});
  WeightedFactorGraph two({X(), y}, {{"a", {X(), y}, {1, 2, 3, 4}, 1.0}, {"b", {y}, {1, 1}, 0.5}});
  auto g3 = fg_to_pdg(two);
  EXPECT_EQ(g3.edges().size(), 2u);
  EXPECT_EQ(g3.edges()[1].cpd.targets()[0].name, "Y");
}

TEST(FgToPdg, ZeroFactorRejected) {
  try {
    single({0, 0}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroFactor);
  }
}

TEST(FreeEnergy, Examples) {
  auto norm = free_energy_identity(single({0.25, 0.75}, 1.0));
  EXPECT_NEAR(norm.inconsistency, 0.0, 1e-9);
  EXPECT_NEAR(norm.neg_log_z, 0.0, 1e-15);
  EXPECT_LT(norm.residual, 1e-9);

  auto raw = free_energy_identity(single({1, 3}, 1.0));
  EXPECT_NEAR(raw.neg_log_z, -std::log(4.0), 1e-14);
  EXPECT_NEAR(raw.normalization_offset, std::log(4.0), 1e-14);
  EXPECT_LT(raw.residual, 1e-9);
  EXPECT_LT(raw.gibbs_tv, 1e-6);

  auto a = Variable::indexed("A", 2), b = Variable::indexed("B", 2), c = Variable::indexed("C", 2);
  WeightedFactorGraph chain({a, b, c}, {{"ab", {a, b}, {1.0, 2.0, 0.5, 3.0}, 1.0}, {"bc", {b, c}, {2.0, 1.0, 1.0, 4.0}, 0.5}});
  auto r = free_energy_identity(chain);
  EXPECT_LT(r.residual, 1e-5);
  EXPECT_LT(r.gibbs_tv, 1e-4);
}

TEST(FreeEnergy, RandomGraphs) {
  pdgtest::Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    auto fg = pdgtest::random_factor_graph(rng);
    auto r = free_energy_identity(fg);
    EXPECT_LT(r.residual, 1e-5) << trial;
    EXPECT_LT(r.gibbs_tv, 1e-4) << trial;
  }
}

TEST(FreeEnergy, NormalizedFactorsHaveZAtMostOne) {
  pdgtest::Rng rng(78);
  for (int trial = 0; trial < 100; ++trial) {
    auto fg = pdgtest::random_factor_graph(rng);
    std::vector<Factor> normalized;
    std::vector<bool> covered(fg.variables().size(), false);
    for (auto f : fg.factors()) {
      double s = 0.0;
      for (double v : f.values) s += v;
      for (auto& v : f.values) v /= s;
      f.theta = 1.0;
      for (const auto& v : f.scope)
        for (std::size_t i = 0; i < covered.size(); ++i) covered[i] = covered[i] || fg.variables()[i].name == v.name;
      normalized.push_back(f);
    }
    if (std::find(covered.begin(), covered.end(), false) != covered.end()) continue;
    auto z = partition_function(WeightedFactorGraph(fg.variables(), normalized)).z;
    EXPECT_LE(z, 1.0 + 1e-12);
  }
}
