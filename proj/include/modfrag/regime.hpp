#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "modfrag/circulation.hpp"
#include "modfrag/core_model.hpp"
#include "modfrag/splitting.hpp"

namespace modfrag {

/// Weakly connected components of the positive-flow support.
struct SupportComponents {
  /// Components over active stations (b_i != 0 or touching a support edge),
  /// each sorted, ordered by smallest member.
  std::vector<std::vector<std::size_t>> components;
  /// Stations outside the active set.
  std::vector<std::size_t> inactive;
  /// Component count over all stations, each inactive station counted alone.
  std::size_t all_station_count = 0;
};

SupportComponents flow_support_components(const RebalanceSolution& solution, const NetFlowVector& b);

/// Number of weakly connected components of the support restricted to the
/// stations selected by mask. Every masked station is a vertex.
std::size_t support_component_count(const RebalanceSolution& solution, const std::vector<bool>& mask);

/// Stations touching at least one positive demand count.
std::vector<bool> demand_stations(const DemandMatrix& demand);

struct DualRange {
  double min = 0.0;
  double max = 0.0;
  double width() const { return max - min; }
};

enum class DualRangeMethod {
  /// The optimal dual face is {feasible a : a_i - a_j = tau_ij on the support
  /// of any optimal flow}; its extent per station is a pair of shortest
  /// paths in the difference-constraint graph. O(n^3).
  kShortestPath,
  /// Solves max/min a_k over dual feasibility, a_anchor = 0 and
  /// sum a_i b_i >= RC(b) with the dense reference LP.
  kSimplex,
};

struct DualDegeneracy {
  bool degenerate = false;
  /// Per station; stations outside the mask carry an empty [0, 0] range.
  std::vector<DualRange> ranges;
  std::vector<bool> mask;
  std::size_t anchor = 0;
  double tolerance = 0.0;
  RebalanceSolution solution;
};

struct DegeneracyOptions {
  DualRangeMethod method = DualRangeMethod::kShortestPath;
  /// Stations whose duals matter. Empty means every station. Active stations
  /// are always included.
  std::vector<bool> mask;
};

/// Degenerate iff some masked station's optimal dual range, with the first
/// masked station anchored at 0, is wider than 1e-6 * max(1, max tau).
DualDegeneracy dual_degeneracy_oracle(const StationGraph& graph, const NetFlowVector& b,
                                      const DegeneracyOptions& options = {});

enum class RegimeKind { kResilient, kAffected, kLinearDivergent };

std::string to_string(RegimeKind kind);

struct DegeneracyCertificate {
  SupportComponents support;
  /// Components of the support over stations carrying demand.
  std::size_t demand_component_count = 0;
  std::vector<DualRange> dual_ranges;
  double max_range_width = 0.0;
  /// Total demand whose origin and destination lie in different components.
  double cross_demand = 0.0;
  bool dual_degenerate = false;
};

struct RegimeLabel {
  RegimeKind kind = RegimeKind::kResilient;
  bool homogeneous_shares = true;
  DegeneracyCertificate certificate;
  /// Heterogeneity gap L and its threshold, set for heterogeneous shares.
  std::optional<double> heterogeneity_gap;
  double gap_threshold = 0.0;
  /// For heterogeneous shares with L ~ 0: degeneracy of each firm's expected demand.
  std::vector<bool> firm_degenerate;
  double monopolist_cost = 0.0;
};

RegimeLabel classify_regime(const StationGraph& graph, const DemandMatrix& demand,
                            const MarketShares& shares,
                            DualRangeMethod method = DualRangeMethod::kShortestPath);

/// L = sum_k RC(net(rho_k (.) L)) - RC(net(L)).
double heterogeneity_gap(const StationGraph& graph, const DemandMatrix& demand, const MarketShares& shares);

/// sum_ij L_ij tau_ij + RC(L): the fleet must exceed this to serve the demand.
double fleet_lower_bound(const StationGraph& graph, const DemandMatrix& demand);

}  // namespace modfrag
