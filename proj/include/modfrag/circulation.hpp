#pragma once

#include <cstddef>
#include <vector>

#include "modfrag/core_model.hpp"
#include "modfrag/matrix.hpp"

namespace modfrag {

struct SupportEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double flow = 0.0;
};

/// Optimal primal/dual pair of the rebalancing circulation.
///
/// Orientation: b_i = sum_j (L_ij - L_ji), flow conservation
/// sum_j (x_ij - x_ji) = b_i, dual feasibility a_i - a_j <= tau_ij, and
/// cost = sum tau_ij x_ij = sum a_i b_i.
struct RebalanceSolution {
  Matrix<double> flows;
  std::vector<double> duals;
  double cost = 0.0;
  /// Edges with flow > flow_tolerance(b), in (from, to) lexicographic order.
  std::vector<SupportEdge> support;
};

/// 1e-9 * max(1, ||b||_1): the "positive flow" threshold for support edges.
double flow_tolerance(const NetFlowVector& b);

/// Solves the min-cost circulation as a transportation problem from stations
/// with b_i > 0 to stations with b_i < 0 over direct edges. The triangle
/// inequality on tau makes multi-hop routes useless, so this is exact.
///
/// Transportation simplex with Bland's rule; ties resolve to the
/// lexicographically smallest (from, to). Duals of stations outside the
/// transportation problem are set to the smallest feasible value, and the
/// result is translated so that duals[0] == 0.
///
/// Throws ValidationError if b has the wrong size (balance is enforced by
/// NetFlowVector itself).
RebalanceSolution min_cost_rebalance(const StationGraph& graph, const NetFlowVector& b);

/// Convenience: optimal cost only.
double rebalancing_cost(const StationGraph& graph, const NetFlowVector& b);

/// Shifts all duals by a constant so that duals[anchor] == 0.
RebalanceSolution normalize_duals(RebalanceSolution solution, std::size_t anchor);

/// Dual objective sum_i a_i b_i.
double dual_objective(const std::vector<double>& duals, const NetFlowVector& b);

/// Exhaustive oracle: enumerates every spanning-tree basis of the
/// surplus-to-deficit transportation problem and keeps the cheapest feasible
/// one. Independent of min_cost_rebalance. Rejects n > 6.
double brute_force_rc(const StationGraph& graph, const NetFlowVector& b);

}  // namespace modfrag
