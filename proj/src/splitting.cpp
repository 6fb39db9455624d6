#include "modfrag/splitting.hpp"

#include <algorithm>
#include <cmath>

#include "modfrag/errors.hpp"
#include "modfrag/rng.hpp"

namespace modfrag {
namespace {

constexpr double kShareSumTol = 1e-12;

void check_share(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("market share outside [0, 1]");
}

}  // namespace

MarketShares MarketShares::homogeneous(double rho) {
  check_share(rho);
  return scalar({rho, 1.0 - rho});
}

MarketShares MarketShares::equal(std::size_t firms) {
  if (firms < 2) throw ValidationError("need at least two firms");
  return scalar(std::vector<double>(firms, 1.0 / static_cast<double>(firms)));
}

MarketShares MarketShares::scalar(std::vector<double> shares) {
  if (shares.size() < 2) throw ValidationError("need at least two firms");
  double sum = 0.0;
  for (double s : shares) {
    check_share(s);
    sum += s;
  }
  if (std::abs(sum - 1.0) > kShareSumTol) throw ValidationError("market shares do not sum to 1");
  MarketShares out;
  out.firms_ = shares.size();
  out.scalar_ = std::move(shares);
  return out;
}

MarketShares MarketShares::heterogeneous(const Matrix<double>& rho) {
  Matrix<double> complement = rho;
  for (auto& v : complement.values()) {
    check_share(v);
    v = 1.0 - v;
  }
  return per_edge({rho, std::move(complement)});
}

MarketShares MarketShares::per_edge(std::vector<Matrix<double>> shares) {
  if (shares.size() < 2) throw ValidationError("need at least two firms");
  const std::size_t n = shares.front().rows();
  for (const auto& m : shares) {
    if (m.rows() != n || m.cols() != n) throw ValidationError("share matrices must be n x n");
    for (double v : m.values()) check_share(v);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double sum = 0.0;
      for (const auto& m : shares) sum += m(i, j);
      if (std::abs(sum - 1.0) > kShareSumTol) {
        throw ValidationError("firm shares on edge (" + std::to_string(i) + "," + std::to_string(j) +
                              ") do not sum to 1");
      }
    }
  }
  MarketShares out;
  out.firms_ = shares.size();
  out.matrices_ = std::move(shares);
  return out;
}

bool MarketShares::homogeneous_on(const DemandMatrix& demand) const {
  if (is_scalar()) return true;
  check_size(demand.size());
  for (const auto& m : matrices_) {
    bool first = true;
    double value = 0.0;
    for (std::size_t i = 0; i < demand.size(); ++i) {
      for (std::size_t j = 0; j < demand.size(); ++j) {
        if (demand.count(i, j) <= 0) continue;
        if (first) {
          value = m(i, j);
          first = false;
        } else if (m(i, j) != value) {
          return false;
        }
      }
    }
  }
  return true;
}

void MarketShares::check_size(std::size_t n) const {
  if (is_scalar()) return;
  if (matrices_.front().rows() != n) throw ValidationError("share matrix size does not match demand");
}

Matrix<double> SplitSample::fluctuation(std::size_t firm, const DemandMatrix& demand,
                                        const MarketShares& shares, std::int64_t theta) const {
  const std::size_t n = demand.size();
  const double t = static_cast<double>(theta);
  auto z = Matrix<double>::square(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double mean = t * shares.share(firm, i, j) * static_cast<double>(demand.count(i, j));
      z(i, j) = (static_cast<double>(firms[firm].count(i, j)) - mean) / std::sqrt(t);
    }
  }
  return z;
}

SplitSample sample_split(const DemandMatrix& demand, const SplitSpec& spec, std::int64_t theta,
                         std::uint64_t seed, std::uint64_t trial) {
  if (theta < 1) throw ValidationError("theta must be >= 1");
  const std::size_t n = demand.size();
  const auto& shares = spec.shares;
  shares.check_size(n);
  const std::size_t nf = shares.firms();
  std::vector<Matrix<std::int64_t>> counts(nf, Matrix<std::int64_t>::square(n, 0));

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::int64_t base = demand.count(i, j);
      if (base == 0) continue;
      std::int64_t total = 0;
      if (__builtin_mul_overflow(base, theta, &total)) throw std::overflow_error("theta * demand overflows");
      SplitMix64 rng(stream_key(seed, trial, i * n + j));
      if (spec.family == SplitFamily::kBinomial) {
        std::int64_t remaining = total;
        double mass = 1.0;
        for (std::size_t k = 0; k + 1 < nf; ++k) {
          const double s = shares.share(k, i, j);
          const double p = mass > 0.0 ? std::clamp(s / mass, 0.0, 1.0) : 0.0;
          const std::int64_t draw = sample_binomial(rng, remaining, p);
          counts[k](i, j) = draw;
          remaining -= draw;
          mass -= s;
        }
        counts[nf - 1](i, j) = remaining;
      } else {
        for (std::size_t k = 0; k < nf; ++k) {
          counts[k](i, j) = sample_poisson(rng, static_cast<double>(total) * shares.share(k, i, j));
        }
      }
    }
  }

  SplitSample sample;
  sample.firms.reserve(nf);
  for (auto& c : counts) sample.firms.emplace_back(std::move(c));
  return sample;
}

Matrix<double> expected_firm_demand(const DemandMatrix& demand, const MarketShares& shares,
                                    std::size_t firm, double theta) {
  const std::size_t n = demand.size();
  shares.check_size(n);
  auto out = Matrix<double>::square(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = theta * shares.share(firm, i, j) * static_cast<double>(demand.count(i, j));
    }
  }
  return out;
}

std::vector<NetFlowVector> expected_split(const DemandMatrix& demand, const SplitSpec& spec,
                                          std::int64_t theta) {
  if (theta < 1) throw ValidationError("theta must be >= 1");
  std::vector<NetFlowVector> out;
  for (std::size_t k = 0; k < spec.shares.firms(); ++k) {
    out.push_back(net_flow(expected_firm_demand(demand, spec.shares, k, static_cast<double>(theta))));
  }
  return out;
}

}  // namespace modfrag
