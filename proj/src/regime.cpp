#include "modfrag/regime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "modfrag/errors.hpp"
#include "modfrag/lp.hpp"

namespace modfrag {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

std::vector<bool> active_stations(const RebalanceSolution& solution, const NetFlowVector& b) {
  const double eps = flow_tolerance(b);
  std::vector<bool> active(b.size(), false);
  for (std::size_t i = 0; i < b.size(); ++i) active[i] = std::abs(b[i]) > eps;
  for (const auto& e : solution.support) active[e.from] = active[e.to] = true;
  return active;
}

std::vector<DualRange> ranges_shortest_path(const StationGraph& graph, const RebalanceSolution& sol,
                                            const std::vector<std::size_t>& stations) {
  const std::size_t m = stations.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pos(graph.size(), m);
  for (std::size_t p = 0; p < m; ++p) pos[stations[p]] = p;

  // a_i - a_j <= w  is an edge j -> i of weight w.
  auto dist = Matrix<double>::square(m, inf);
  for (std::size_t p = 0; p < m; ++p) {
    dist(p, p) = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      if (p != q) dist(q, p) = std::min(dist(q, p), graph.tau(stations[p], stations[q]));
    }
  }
  for (const auto& e : sol.support) {
    const std::size_t p = pos[e.from];
    const std::size_t q = pos[e.to];
    if (p == m || q == m) continue;
    dist(p, q) = std::min(dist(p, q), -graph.tau(e.from, e.to));
  }
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      if (dist(i, k) == inf) continue;
      for (std::size_t j = 0; j < m; ++j) {
        const double via = dist(i, k) + dist(k, j);
        if (via < dist(i, j)) dist(i, j) = via;
      }
    }
  }
  std::vector<DualRange> out(m);
  for (std::size_t p = 0; p < m; ++p) out[p] = {-dist(p, 0), dist(0, p)};
  return out;
}

std::vector<DualRange> ranges_simplex(const StationGraph& graph, const NetFlowVector& b, double cost,
                                      const std::vector<std::size_t>& stations) {
  const std::size_t m = stations.size();
  if (m == 0) return {};
  // Variables y_p = a_p + shift for p = 1..m-1 (station 0 of the list is the anchor).
  const double shift = graph.max_cost() + 1.0;
  const std::size_t nv = m - 1;
  lp::LinearProgram base;
  base.objective.assign(nv, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t q = 0; q < m; ++q) {
      if (p == q) continue;
      std::vector<double> row(nv, 0.0);
      double rhs = graph.tau(stations[p], stations[q]);
      if (p > 0) {
        row[p - 1] += 1.0;
        rhs += shift;
      }
      if (q > 0) {
        row[q - 1] -= 1.0;
        rhs -= shift;
      }
      base.ub_rows.push_back(std::move(row));
      base.ub_rhs.push_back(rhs);
    }
  }
  // sum_p b_p a_p >= RC - slack keeps only optimal duals.
  {
    std::vector<double> row(nv, 0.0);
    double offset = 0.0;
    for (std::size_t p = 1; p < m; ++p) {
      row[p - 1] = -b[stations[p]];
      offset += b[stations[p]] * shift;
    }
    const double slack = 1e-11 * std::max(1.0, std::abs(cost));
    base.ub_rows.push_back(std::move(row));
    base.ub_rhs.push_back(-(cost - slack) - offset);
  }

  std::vector<DualRange> out(m);
  for (std::size_t p = 1; p < m; ++p) {
    for (double sense : {1.0, -1.0}) {
      lp::LinearProgram prog = base;
      prog.objective[p - 1] = sense;
      const lp::Result res = lp::solve(prog);
      if (res.status != lp::Status::kOptimal) throw std::runtime_error("dual range LP not optimal");
      const double value = res.x[p - 1] - shift;
      if (sense > 0) {
        out[p].min = value;
      } else {
        out[p].max = value;
      }
    }
  }
  return out;
}

}  // namespace

SupportComponents flow_support_components(const RebalanceSolution& solution, const NetFlowVector& b) {
  const std::size_t n = b.size();
  const auto active = active_stations(solution, b);
  DisjointSets sets(n);
  for (const auto& e : solution.support) sets.unite(e.from, e.to);
  std::map<std::size_t, std::vector<std::size_t>> groups;
  SupportComponents out;
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) {
      groups[sets.find(i)].push_back(i);
    } else {
      out.inactive.push_back(i);
    }
  }
  for (auto& [root, members] : groups) out.components.push_back(std::move(members));
  out.all_station_count = out.components.size() + out.inactive.size();
  return out;
}

std::size_t support_component_count(const RebalanceSolution& solution, const std::vector<bool>& mask) {
  const std::size_t n = mask.size();
  DisjointSets sets(n);
  for (const auto& e : solution.support) {
    if (mask[e.from] && mask[e.to]) sets.unite(e.from, e.to);
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += (mask[i] && sets.find(i) == i) ? 1 : 0;
  return count;
}

std::vector<bool> demand_stations(const DemandMatrix& demand) {
  std::vector<bool> mask(demand.size(), false);
  for (std::size_t i = 0; i < demand.size(); ++i) {
    for (std::size_t j = 0; j < demand.size(); ++j) {
      if (demand.count(i, j) > 0) mask[i] = mask[j] = true;
    }
  }
  return mask;
}

DualDegeneracy dual_degeneracy_oracle(const StationGraph& graph, const NetFlowVector& b,
                                      const DegeneracyOptions& options) {
  const std::size_t n = graph.size();
  DualDegeneracy out;
  out.solution = min_cost_rebalance(graph, b);
  out.tolerance = 1e-6 * std::max(1.0, graph.max_cost());
  out.mask = options.mask.empty() ? std::vector<bool>(n, true) : options.mask;
  if (out.mask.size() != n) throw ValidationError("station mask size does not match station count");
  const auto active = active_stations(out.solution, b);
  for (std::size_t i = 0; i < n; ++i) out.mask[i] = out.mask[i] || active[i];

  std::vector<std::size_t> stations;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.mask[i]) stations.push_back(i);
  }
  out.ranges.assign(n, DualRange{});
  if (stations.empty()) return out;
  out.anchor = stations.front();

  const auto ranges = options.method == DualRangeMethod::kShortestPath
                          ? ranges_shortest_path(graph, out.solution, stations)
                          : ranges_simplex(graph, b, out.solution.cost, stations);
  for (std::size_t p = 0; p < stations.size(); ++p) {
    out.ranges[stations[p]] = ranges[p];
    if (ranges[p].width() > out.tolerance) out.degenerate = true;
  }
  return out;
}

std::string to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::kResilient:
      return "Resilient";
    case RegimeKind::kAffected:
      return "Affected";
    case RegimeKind::kLinearDivergent:
      return "LinearDivergent";
  }
  return "unknown";
}

double heterogeneity_gap(const StationGraph& graph, const DemandMatrix& demand, const MarketShares& shares) {
  shares.check_size(demand.size());
  double total = 0.0;
  for (std::size_t k = 0; k < shares.firms(); ++k) {
    total += rebalancing_cost(graph, net_flow(expected_firm_demand(demand, shares, k)));
  }
  return total - rebalancing_cost(graph, net_flow(demand));
}

RegimeLabel classify_regime(const StationGraph& graph, const DemandMatrix& demand,
                            const MarketShares& shares, DualRangeMethod method) {
  if (demand.size() != graph.size()) throw ValidationError("demand size does not match station count");
  shares.check_size(demand.size());
  const NetFlowVector b = net_flow(demand);
  const DegeneracyOptions options{method, demand_stations(demand)};
  const DualDegeneracy verdict = dual_degeneracy_oracle(graph, b, options);

  RegimeLabel label;
  label.monopolist_cost = verdict.solution.cost;
  auto& cert = label.certificate;
  cert.support = flow_support_components(verdict.solution, b);
  cert.demand_component_count = support_component_count(verdict.solution, verdict.mask);
  cert.dual_ranges = verdict.ranges;
  for (const auto& r : verdict.ranges) cert.max_range_width = std::max(cert.max_range_width, r.width());
  cert.dual_degenerate = verdict.degenerate;
  {
    DisjointSets sets(demand.size());
    for (const auto& e : verdict.solution.support) sets.unite(e.from, e.to);
    for (std::size_t i = 0; i < demand.size(); ++i) {
      for (std::size_t j = 0; j < demand.size(); ++j) {
        if (sets.find(i) != sets.find(j)) cert.cross_demand += static_cast<double>(demand.count(i, j));
      }
    }
  }

  label.homogeneous_shares = shares.homogeneous_on(demand);
  if (label.homogeneous_shares) {
    label.kind = verdict.degenerate ? RegimeKind::kAffected : RegimeKind::kResilient;
    return label;
  }

  const double gap = heterogeneity_gap(graph, demand, shares);
  label.heterogeneity_gap = gap;
  label.gap_threshold = 1e-6 * std::max(1.0, verdict.solution.cost);
  if (gap > label.gap_threshold) {
    label.kind = RegimeKind::kLinearDivergent;
    return label;
  }
  bool any = false;
  for (std::size_t k = 0; k < shares.firms(); ++k) {
    const auto firm_b = net_flow(expected_firm_demand(demand, shares, k));
    const bool degenerate = dual_degeneracy_oracle(graph, firm_b, options).degenerate;
    label.firm_degenerate.push_back(degenerate);
    any = any || degenerate;
  }
  label.kind = any ? RegimeKind::kAffected : RegimeKind::kResilient;
  return label;
}

double fleet_lower_bound(const StationGraph& graph, const DemandMatrix& demand) {
  if (demand.size() != graph.size()) throw ValidationError("demand size does not match station count");
  double busy = 0.0;
  for (std::size_t i = 0; i < demand.size(); ++i) {
    for (std::size_t j = 0; j < demand.size(); ++j) {
      busy += static_cast<double>(demand.count(i, j)) * graph.tau(i, j);
    }
  }
  return busy + rebalancing_cost(graph, net_flow(demand));
}

}  // namespace modfrag
