#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "modfrag/core_model.hpp"
#include "modfrag/matrix.hpp"

namespace modfrag {

/// kappa(i, j) = 1 iff firm a takes edge (i, j) wholly. Zero on edges without demand.
using SplitIndicator = Matrix<std::uint8_t>;

struct DemandEdge {
  std::size_t from = 0;
  std::size_t to = 0;
};

/// Positive-demand edges in (from, to) lexicographic order.
std::vector<DemandEdge> demand_edges(const DemandMatrix& demand);

/// Throws ValidationError unless kappa is binary, sized like demand and zero
/// off the demand support.
void check_split_indicator(const DemandMatrix& demand, const SplitIndicator& kappa);

/// f = RC(net(kappa L)) + RC(net((1 - kappa) L)) - RC(net(L)).
double pof_of_split(const StationGraph& graph, const DemandMatrix& demand, const SplitIndicator& kappa);

/// Same loss for a fractional split w in [0, 1]^{n x n}: firm a serves w_ij L_ij.
double pof_of_fractional_split(const StationGraph& graph, const DemandMatrix& demand, const Matrix<double>& w);

/// All-ones indicator on the demand support.
SplitIndicator full_split(const DemandMatrix& demand);

enum class StopReason { kFixedPoint, kCycle, kMaxIters };

std::string to_string(StopReason reason);

struct RestartTrace {
  double initial_value = 0.0;
  double best_value = 0.0;
  std::size_t iterations = 0;
  StopReason stop = StopReason::kMaxIters;
};

struct AdversarialResult {
  SplitIndicator kappa;
  double value = 0.0;
  /// Of the restart that produced the best value.
  std::size_t iterations = 0;
  StopReason stop = StopReason::kMaxIters;
  std::size_t best_restart = 0;
  /// f at the caller's initial kappa.
  double initial_value = 0.0;
  std::vector<RestartTrace> restarts;
};

struct SubgradientOptions {
  std::size_t max_iters = 100;
  /// Restart 0 starts from the given kappa, the others from random corners.
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Sign-rounded supergradient ascent over hypercube corners. Each step sets
/// kappa_ij = 1 where g_ij > 0 and 0 where g_ij < 0, keeping it on ties, with
/// g_ij = L_ij [(a^a_i - a^a_j) - (a^b_i - a^b_j)] from the firms' optimal
/// duals. Stops on a fixed point, a revisited corner or max_iters and keeps
/// the best corner seen. Ties between restarts go to the lowest index.
AdversarialResult adversarial_subgradient(const StationGraph& graph, const DemandMatrix& demand,
                                          const SplitIndicator& init, const SubgradientOptions& options = {});

struct BruteForceResult {
  SplitIndicator kappa;
  double value = 0.0;
  std::size_t edges = 0;
  std::uint64_t corners = 0;
};

constexpr std::size_t kMaxBruteForceEdges = 20;

/// Exact maximum over every binary corner. Only corners with the first edge
/// assigned to firm a are visited (f is symmetric under kappa -> 1 - kappa);
/// ties go to the smallest corner index. Rejects more than 20 demand edges.
BruteForceResult adversarial_bruteforce(const StationGraph& graph, const DemandMatrix& demand,
                                        std::size_t threads = 1);

}  // namespace modfrag
