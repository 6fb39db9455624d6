#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "modfrag/core_model.hpp"
#include "modfrag/matrix.hpp"

namespace modfrag {

/// Per-firm market shares: either one scalar per firm (homogeneous over the
/// network) or one per-edge matrix per firm. Shares lie in [0, 1] and sum to
/// one across firms on every edge.
class MarketShares {
 public:
  /// Two firms with shares rho and 1 - rho.
  static MarketShares homogeneous(double rho);
  /// n firms with share 1/n each.
  static MarketShares equal(std::size_t firms);
  static MarketShares scalar(std::vector<double> shares);
  /// Two firms: firm a takes rho[i][j] of edge (i, j), firm b the rest.
  static MarketShares heterogeneous(const Matrix<double>& rho);
  /// n firms, one share matrix each.
  static MarketShares per_edge(std::vector<Matrix<double>> shares);

  std::size_t firms() const { return firms_; }
  bool is_scalar() const { return !scalar_.empty(); }
  const std::vector<double>& scalar_shares() const { return scalar_; }
  const std::vector<Matrix<double>>& matrices() const { return matrices_; }
  double share(std::size_t firm, std::size_t i, std::size_t j) const {
    return is_scalar() ? scalar_[firm] : matrices_[firm](i, j);
  }
  /// True when every firm's share is constant over the edges carrying demand.
  bool homogeneous_on(const DemandMatrix& demand) const;
  /// Throws ValidationError if matrices do not match an n-station network.
  void check_size(std::size_t n) const;

 private:
  std::size_t firms_ = 0;
  std::vector<double> scalar_;
  std::vector<Matrix<double>> matrices_;
};

enum class SplitFamily {
  kBinomial,      // multinomial partition of theta * L_ij, exact conservation
  kPoissonDemand  // independent Poisson(theta * rho_k * L_ij) per firm
};

struct SplitSpec {
  SplitFamily family = SplitFamily::kBinomial;
  MarketShares shares = MarketShares::homogeneous(0.5);
};

struct SplitSample {
  std::vector<DemandMatrix> firms;

  /// Z = (L^k - theta * rho_k * L) / sqrt(theta) for one firm.
  Matrix<double> fluctuation(std::size_t firm, const DemandMatrix& demand, const MarketShares& shares,
                             std::int64_t theta) const;
};

/// Draws one split of theta * demand. Edge (i, j) uses the stream
/// stream_key(seed, trial, i * n + j); firms draw in index order within it.
SplitSample sample_split(const DemandMatrix& demand, const SplitSpec& spec, std::int64_t theta,
                         std::uint64_t seed, std::uint64_t trial = 0);

/// Expected per-firm demand theta * rho_k (.) L as a real matrix.
Matrix<double> expected_firm_demand(const DemandMatrix& demand, const MarketShares& shares,
                                    std::size_t firm, double theta = 1.0);

/// net_flow(theta * rho_k (.) L) for every firm.
std::vector<NetFlowVector> expected_split(const DemandMatrix& demand, const SplitSpec& spec,
                                          std::int64_t theta);

}  // namespace modfrag
