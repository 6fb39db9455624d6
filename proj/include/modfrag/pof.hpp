#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "modfrag/core_model.hpp"
#include "modfrag/splitting.hpp"

namespace modfrag {

/// Monte Carlo estimate of the Price of Fragmentation at one scale theta.
struct PofEstimate {
  std::int64_t theta = 1;
  double gamma_mean = 0.0;
  double gamma_stderr = 0.0;
  std::size_t trials = 0;
  std::vector<double> firm_mean_rc;
  /// RC(theta * L) for binomial splits; mean RC of the realized aggregate
  /// for Poisson demand.
  double monopolist_rc = 0.0;
  /// Per-trial losses, indexed by trial.
  std::vector<double> samples;

  double gamma_over_theta() const { return gamma_mean / static_cast<double>(theta); }
};

struct PofOptions {
  std::size_t trials = 500;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Per-trial loss sum_k RC(net(L^k)) - RC(net(baseline)). Trials are keyed by
/// index so the estimate is independent of the thread count.
PofEstimate estimate_pof(const StationGraph& graph, const DemandMatrix& demand, const SplitSpec& spec,
                         std::int64_t theta, const PofOptions& options);

enum class SlopeStatus { kFitted, kIndeterminate };

struct SlopeFit {
  SlopeStatus status = SlopeStatus::kIndeterminate;
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t points_used = 0;
};

struct SlopeOptions {
  std::size_t bootstrap = 200;
  std::uint64_t seed = 0;
};

/// Least-squares slope of log(gamma / theta) against log(theta) over points
/// with gamma_mean > 3 * gamma_stderr. Fewer than three such points gives
/// kIndeterminate. The CI is a percentile bootstrap over resampled trials
/// (degenerate when the estimates carry no samples).
SlopeFit fit_loglog_slope(const std::vector<PofEstimate>& points, const SlopeOptions& options = {});

struct PofCurve {
  std::vector<PofEstimate> points;
  SlopeFit fit;
  /// "decay-faster-than-threshold", "sqrt-growth", "linear-divergence" or
  /// "other-decay".
  std::string regime_hint;
};

std::string regime_hint(const SlopeFit& fit);

/// Per-theta seeds are derived from (options.seed, theta), so adding grid
/// points does not change existing ones.
PofCurve scaling_sweep(const StationGraph& graph, const DemandMatrix& demand, const SplitSpec& spec,
                       const std::vector<std::int64_t>& theta_grid, const PofOptions& options);

std::uint64_t theta_seed(std::uint64_t master, std::int64_t theta);

/// Large-scale prediction for the two-station network with tau_12 = 1,
/// tau_21 = tau, L_12 = lambda, L_21 = mu.
struct TwoNodePrediction {
  bool balanced = false;
  /// Balanced case: (tau + 1) sqrt(2 theta rho (1 - rho) (lambda + mu) / pi).
  double gamma = 0.0;
  /// Unbalanced case: r = rho (lambda - mu)^2 / (2 (1 - rho) (lambda + mu))
  /// and the envelope theta^{-1/2} exp(-r theta) (prefactor not modelled).
  double decay_rate = 0.0;
  double envelope = 0.0;
};

TwoNodePrediction two_node_closed_form(double lambda, double mu, double tau, double rho, double theta);

/// Closed-form RC of the two-station network: max{tau (mu - lambda), lambda - mu}.
double two_node_rc(double lambda, double mu, double tau);

std::string curve_to_csv(const PofCurve& curve);

}  // namespace modfrag
