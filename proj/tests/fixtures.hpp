#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "modfrag/core_model.hpp"
#include "modfrag/splitting.hpp"

namespace fixtures {

using modfrag::DemandMatrix;
using modfrag::Matrix;
using modfrag::StationGraph;

// Four stations: 1->3 costs 1, 1->4 costs 3, 2->3 costs 2, 2->4 costs 5, all
// else 10 (zero-based below).
inline StationGraph four_node_graph() {
  auto tau = Matrix<double>::square(4, 10.0);
  for (std::size_t i = 0; i < 4; ++i) tau(i, i) = 0.0;
  tau(0, 2) = 1;
  tau(0, 3) = 3;
  tau(1, 2) = 2;
  tau(1, 3) = 5;
  return StationGraph(tau);
}

inline DemandMatrix demand_from(std::size_t n, std::initializer_list<std::tuple<int, int, std::int64_t>> entries) {
  auto m = Matrix<std::int64_t>::square(n, 0);
  for (auto [i, j, v] : entries) m(i, j) = v;
  return DemandMatrix(m);
}

// Net flow b = (2, 3, -4, -1): RC 10, support 1->3, 1->4, 2->3 (connected).
inline DemandMatrix lambda1() {
  return demand_from(4, {{0, 2, 3}, {2, 0, 1}, {1, 2, 2}, {1, 3, 2}, {3, 1, 1}});
}

// Net flow b = (2, 3, -3, -2): RC 12, support 1->4 and 2->3 (two components).
inline DemandMatrix lambda2() {
  return demand_from(4, {{0, 3, 3}, {3, 0, 1}, {1, 2, 3}, {0, 1, 2}, {1, 0, 2}});
}

inline StationGraph two_node_graph(double tau21) {
  return StationGraph(Matrix<double>::from_rows({{0.0, 1.0}, {tau21, 0.0}}));
}

// L_12 = lambda, L_21 = mu.
inline DemandMatrix two_node_demand(std::int64_t lambda, std::int64_t mu) {
  return demand_from(2, {{0, 1, lambda}, {1, 0, mu}});
}

// Heterogeneous two-node fixture: lambda = mu = 10, tau = 2, firm a takes
// 80% of 1->2 and 20% of 2->1. L = 18.
inline modfrag::MarketShares heterogeneous_shares() {
  return modfrag::MarketShares::heterogeneous(Matrix<double>::from_rows({{0.0, 0.8}, {0.2, 0.0}}));
}

// Random metric: integer costs in [lo, hi] satisfy the triangle inequality
// strictly whenever 2 lo > hi.
inline StationGraph random_metric(std::mt19937_64& rng, std::size_t n, int lo = 6, int hi = 11) {
  std::uniform_int_distribution<int> d(lo, hi);
  auto tau = Matrix<double>::square(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) tau(i, j) = d(rng);
    }
  }
  return StationGraph(tau);
}

// Random metric from points in the plane (Euclidean, asymmetric-free).
inline StationGraph random_planar(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<modfrag::Point> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return StationGraph(modfrag::manhattan_matrix(pts), pts);
}

inline DemandMatrix random_demand(std::mt19937_64& rng, std::size_t n, int max_count = 5, double density = 0.6) {
  std::uniform_int_distribution<int> c(1, max_count);
  std::bernoulli_distribution on(density);
  auto m = Matrix<std::int64_t>::square(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && on(rng)) m(i, j) = c(rng);
    }
  }
  return DemandMatrix(m);
}

}  // namespace fixtures
