#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "modfrag/circulation.hpp"
#include "modfrag/errors.hpp"
#include "modfrag/regime.hpp"

using namespace modfrag;

namespace {

StationGraph perturbed(const StationGraph& g, std::mt19937_64& rng, double eps) {
  std::uniform_real_distribution<double> f(1.0 - eps, 1.0 + eps);
  auto tau = g.costs();
  for (std::size_t i = 0; i < tau.rows(); ++i) {
    for (std::size_t j = 0; j < tau.cols(); ++j) {
      if (i != j) tau(i, j) *= f(rng);
    }
  }
  return StationGraph(tau);
}

std::vector<bool> active_only(std::size_t n) { return std::vector<bool>(n, false); }

}  // namespace

TEST(SupportComponents, FourNodeInstances) {
  const auto g = fixtures::four_node_graph();
  const auto b1 = net_flow(fixtures::lambda1());
  const auto c1 = flow_support_components(min_cost_rebalance(g, b1), b1);
  ASSERT_EQ(c1.components.size(), 1u);
  EXPECT_EQ(c1.components[0], (std::vector<std::size_t>{0, 1, 2, 3}));

  const auto b2 = net_flow(fixtures::lambda2());
  const auto c2 = flow_support_components(min_cost_rebalance(g, b2), b2);
  ASSERT_EQ(c2.components.size(), 2u);
  EXPECT_EQ(c2.components[0], (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(c2.components[1], (std::vector<std::size_t>{1, 2}));
}

TEST(SupportComponents, ZeroNetFlowHasNone) {
  const NetFlowVector b(std::vector<double>(4, 0.0));
  const auto c = flow_support_components(min_cost_rebalance(fixtures::four_node_graph(), b), b);
  EXPECT_TRUE(c.components.empty());
  EXPECT_EQ(c.inactive.size(), 4u);
  EXPECT_EQ(c.all_station_count, 4u);
}

TEST(DualOracle, BalancedTwoNodeIsDegenerate) {
  for (auto method : {DualRangeMethod::kShortestPath, DualRangeMethod::kSimplex}) {
    const double tau = 2.0;
    const auto r = dual_degeneracy_oracle(fixtures::two_node_graph(tau), net_flow(fixtures::two_node_demand(4, 4)),
                                          {method, {}});
    EXPECT_TRUE(r.degenerate);
    EXPECT_NEAR(r.ranges[1].min, -1.0, 1e-9);
    EXPECT_NEAR(r.ranges[1].max, tau, 1e-9);
  }
}

TEST(DualOracle, UnbalancedTwoNodeIsPinned) {
  for (auto method : {DualRangeMethod::kShortestPath, DualRangeMethod::kSimplex}) {
    const auto r = dual_degeneracy_oracle(fixtures::two_node_graph(2.0), net_flow(fixtures::two_node_demand(3, 5)),
                                          {method, {}});
    EXPECT_FALSE(r.degenerate);
    // b = (-2, 2): the optimum 4 is attained only at the corner a_2 = 2.
    EXPECT_NEAR(r.ranges[1].min, 2.0, 1e-9);
    EXPECT_NEAR(r.ranges[1].max, 2.0, 1e-9);
  }
}

TEST(DualOracle, LambdaTwoHasUnitWidth) {
  const auto g = fixtures::four_node_graph();
  for (auto method : {DualRangeMethod::kShortestPath, DualRangeMethod::kSimplex}) {
    const auto r = dual_degeneracy_oracle(g, net_flow(fixtures::lambda2()), {method, {}});
    EXPECT_TRUE(r.degenerate);
    double widest = 0.0;
    for (const auto& range : r.ranges) widest = std::max(widest, range.width());
    EXPECT_NEAR(widest, 1.0, 1e-9);
    EXPECT_NEAR(r.ranges[1].min, 1.0, 1e-9);
    EXPECT_NEAR(r.ranges[1].max, 2.0, 1e-9);
  }
  const auto r1 = dual_degeneracy_oracle(g, net_flow(fixtures::lambda1()));
  EXPECT_FALSE(r1.degenerate);
}

TEST(DualOracle, MethodsAgreeOnRandomInstances) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 3 + t % 4;
    const auto g = t % 2 ? fixtures::random_metric(rng, n) : fixtures::random_planar(rng, n);
    const auto d = fixtures::random_demand(rng, n, 20, 0.5);
    const auto b = net_flow(d);
    const auto mask = demand_stations(d);
    const auto sp = dual_degeneracy_oracle(g, b, {DualRangeMethod::kShortestPath, mask});
    const auto lp = dual_degeneracy_oracle(g, b, {DualRangeMethod::kSimplex, mask});
    EXPECT_EQ(sp.degenerate, lp.degenerate);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(sp.ranges[i].min, lp.ranges[i].min, 1e-6);
      EXPECT_NEAR(sp.ranges[i].max, lp.ranges[i].max, 1e-6);
    }
  }
}

TEST(DualOracle, OptimalFaceAttainsCost) {
  // Duals at either end of every range remain optimal after re-solving:
  // checked through a_i b_i at the min corner of the LP route.
  const auto g = fixtures::four_node_graph();
  const auto b = net_flow(fixtures::lambda2());
  const auto r = dual_degeneracy_oracle(g, b, {DualRangeMethod::kShortestPath, {}});
  std::vector<double> lo(4), hi(4);
  for (std::size_t i = 0; i < 4; ++i) {
    lo[i] = r.ranges[i].min;
    hi[i] = r.ranges[i].max;
  }
  EXPECT_NEAR(dual_objective(lo, b), 12.0, 1e-9);
  EXPECT_NEAR(dual_objective(hi, b), 12.0, 1e-9);
}

TEST(Agreement, NecessityOnIntegerCosts) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + t % 3;
    const auto g = fixtures::random_metric(rng, n);
    const auto d = fixtures::random_demand(rng, n, 20, 0.5);
    const auto b = net_flow(d);
    for (const auto& mask : {active_only(n), demand_stations(d)}) {
      const auto r = dual_degeneracy_oracle(g, b, {DualRangeMethod::kSimplex, mask});
      const std::size_t count = support_component_count(r.solution, r.mask);
      if (r.degenerate) EXPECT_GT(count, 1u) << "instance " << t;
    }
  }
}

TEST(Agreement, SufficiencyAfterPerturbation) {
  std::mt19937_64 rng(12);
  int degenerate = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + t % 3;
    const auto g = perturbed(fixtures::random_metric(rng, n), rng, 1e-3);
    const auto d = fixtures::random_demand(rng, n, 20, 0.5);
    const auto b = net_flow(d);
    for (const auto& mask : {active_only(n), demand_stations(d)}) {
      const auto r = dual_degeneracy_oracle(g, b, {DualRangeMethod::kSimplex, mask});
      const std::size_t count = support_component_count(r.solution, r.mask);
      EXPECT_EQ(count > 1, r.degenerate) << "instance " << t;
      degenerate += r.degenerate ? 1 : 0;
    }
  }
  EXPECT_GT(degenerate, 0);
  EXPECT_LT(degenerate, 200);
}

TEST(Classify, CanonicalLabels) {
  const auto g = fixtures::four_node_graph();
  const auto half = MarketShares::homogeneous(0.5);
  const auto l1 = classify_regime(g, fixtures::lambda1(), half);
  EXPECT_EQ(l1.kind, RegimeKind::kResilient);
  const auto l2 = classify_regime(g, fixtures::lambda2(), half);
  EXPECT_EQ(l2.kind, RegimeKind::kAffected);
  EXPECT_EQ(l2.certificate.support.components.size(), 2u);
  EXPECT_NEAR(l2.certificate.max_range_width, 1.0, 1e-9);
  EXPECT_GT(l2.certificate.cross_demand, 0.0);

  const auto lh = classify_regime(fixtures::two_node_graph(2.0), fixtures::two_node_demand(10, 10),
                                  fixtures::heterogeneous_shares());
  EXPECT_EQ(lh.kind, RegimeKind::kLinearDivergent);
  ASSERT_TRUE(lh.heterogeneity_gap.has_value());
  EXPECT_NEAR(*lh.heterogeneity_gap, 18.0, 1e-6);
  EXPECT_FALSE(lh.homogeneous_shares);
}

TEST(Classify, BalancedTwoNodeIsAffected) {
  const auto l = classify_regime(fixtures::two_node_graph(2.0), fixtures::two_node_demand(5, 5),
                                 MarketShares::homogeneous(0.5));
  EXPECT_EQ(l.kind, RegimeKind::kAffected);
}

TEST(Classify, ThreeEqualFirmsKeepLabels) {
  const auto g = fixtures::four_node_graph();
  EXPECT_EQ(classify_regime(g, fixtures::lambda1(), MarketShares::equal(3)).kind, RegimeKind::kResilient);
  EXPECT_EQ(classify_regime(g, fixtures::lambda2(), MarketShares::equal(3)).kind, RegimeKind::kAffected);
}

TEST(Classify, ScaleInvariant) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 3 + t % 3;
    const auto g = fixtures::random_planar(rng, n);
    const auto d = fixtures::random_demand(rng, n, 20, 0.5);
    const auto base = classify_regime(g, d, MarketShares::homogeneous(0.3)).kind;
    for (std::int64_t theta : {2, 10}) {
      EXPECT_EQ(classify_regime(g, scale_demand(d, theta), MarketShares::homogeneous(0.3)).kind, base);
    }
  }
}

TEST(Classify, HeterogeneousWithZeroGapFallsBackToFirms) {
  // Shares differ only on edges whose removal keeps each firm's net flow
  // proportional: here every edge is served the same way, so L = 0.
  const auto g = fixtures::four_node_graph();
  auto rho = Matrix<double>::square(4, 0.5);
  rho(0, 1) = 0.9;
  rho(1, 0) = 0.9;  // 1 <-> 2 traffic cancels in the net flow for both firms
  const auto label = classify_regime(g, fixtures::lambda2(), MarketShares::heterogeneous(rho));
  ASSERT_TRUE(label.heterogeneity_gap.has_value());
  EXPECT_NEAR(*label.heterogeneity_gap, 0.0, 1e-9);
  EXPECT_EQ(label.kind, RegimeKind::kAffected);
  EXPECT_EQ(label.firm_degenerate.size(), 2u);
}

TEST(HeterogeneityGap, ScalarSharesGiveZero) {
  const auto g = fixtures::four_node_graph();
  EXPECT_NEAR(heterogeneity_gap(g, fixtures::lambda1(), MarketShares::homogeneous(0.3)), 0.0, 1e-9);
  EXPECT_NEAR(heterogeneity_gap(g, fixtures::lambda1(), MarketShares::equal(3)), 0.0, 1e-9);
}

TEST(HeterogeneityGap, NonnegativeOnRandomShares) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 3 + t % 4;
    const auto g = fixtures::random_planar(rng, n);
    const auto d = fixtures::random_demand(rng, n, 20, 0.6);
    auto rho = Matrix<double>::square(n, 0.0);
    for (auto& v : rho.values()) v = u(rng);
    EXPECT_GE(heterogeneity_gap(g, d, MarketShares::heterogeneous(rho)), -1e-9);
  }
}

TEST(FleetBound, TwoNodeAndHomogeneity) {
  const auto g = fixtures::two_node_graph(2.0);
  EXPECT_NEAR(fleet_lower_bound(g, fixtures::two_node_demand(3, 5)), 17.0, 1e-9);
  EXPECT_NEAR(fleet_lower_bound(g, fixtures::two_node_demand(0, 0)), 0.0, 1e-12);
  EXPECT_NEAR(fleet_lower_bound(g, fixtures::two_node_demand(6, 10)), 34.0, 1e-9);
}
