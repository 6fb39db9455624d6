#include "modfrag/circulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "modfrag/errors.hpp"

namespace modfrag {
namespace {

// Surplus stations (b > 0) become rows, deficit stations (b < 0) columns.
struct TransportProblem {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<double> supply;
  std::vector<double> demand;
};

TransportProblem make_transport(const NetFlowVector& b) {
  TransportProblem tp;
  const double zero = 1e-12 * std::max(1.0, b.l1_norm());
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] > zero) {
      tp.rows.push_back(i);
      tp.supply.push_back(b[i]);
    } else if (b[i] < -zero) {
      tp.cols.push_back(i);
      tp.demand.push_back(-b[i]);
    }
  }
  if (tp.rows.empty() || tp.cols.empty()) return {};
  // Push the round-off imbalance onto the largest entry so totals match exactly.
  const double s = std::accumulate(tp.supply.begin(), tp.supply.end(), 0.0);
  const double d = std::accumulate(tp.demand.begin(), tp.demand.end(), 0.0);
  auto& big = *std::max_element(tp.demand.begin(), tp.demand.end());
  big += s - d;
  return tp;
}

struct Cell {
  std::size_t r = 0;
  std::size_t c = 0;
  double flow = 0.0;
};

class TransportationSimplex {
 public:
  TransportationSimplex(const StationGraph& graph, const TransportProblem& tp)
      : graph_(graph), tp_(tp), m_(tp.rows.size()), k_(tp.cols.size()) {
    double scale = 0.0;
    for (double s : tp.supply) scale += s;
    snap_ = 1e-13 * std::max(1.0, scale);
    cost_tol_ = 1e-10 * std::max(1.0, graph.max_cost());
  }

  void solve() {
    northwest_corner();
    const std::size_t max_pivots = 50 * (m_ + k_) * (m_ * k_ + 1) + 1000;
    for (std::size_t pivot = 0;; ++pivot) {
      if (pivot > max_pivots) throw std::runtime_error("transportation simplex did not terminate");
      compute_potentials();
      const auto entering = find_entering();
      if (!entering) return;
      this->pivot(entering->first, entering->second);
    }
  }

  const std::vector<Cell>& basis() const { return basis_; }
  double row_potential(std::size_t r) const { return u_[r]; }
  double col_potential(std::size_t c) const { return v_[c]; }

 private:
  double cost(std::size_t r, std::size_t c) const { return graph_.tau(tp_.rows[r], tp_.cols[c]); }

  void northwest_corner() {
    std::vector<double> s = tp_.supply;
    std::vector<double> d = tp_.demand;
    std::size_t r = 0;
    std::size_t c = 0;
    while (true) {
      const double q = std::min(s[r], d[c]);
      basis_.push_back({r, c, q});
      s[r] -= q;
      d[c] -= q;
      if (r == m_ - 1 && c == k_ - 1) break;
      if (c == k_ - 1 || (r < m_ - 1 && s[r] <= d[c])) {
        ++r;
      } else {
        ++c;
      }
    }
  }

  // Basis tree over nodes [0, m) = rows and [m, m + k) = columns.
  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(m_ + k_);
    for (std::size_t e = 0; e < basis_.size(); ++e) {
      adj[basis_[e].r].push_back(e);
      adj[m_ + basis_[e].c].push_back(e);
    }
    return adj;
  }

  std::size_t other_end(std::size_t e, std::size_t node) const {
    return node < m_ ? m_ + basis_[e].c : basis_[e].r;
  }

  void compute_potentials() {
    u_.assign(m_, 0.0);
    v_.assign(k_, 0.0);
    const auto adj = adjacency();
    std::vector<bool> seen(m_ + k_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t e : adj[node]) {
        const std::size_t next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = true;
        const double c = cost(basis_[e].r, basis_[e].c);
        if (next >= m_) {
          v_[next - m_] = u_[basis_[e].r] - c;  // u_r - v_c = tau
        } else {
          u_[next] = v_[basis_[e].c] + c;
        }
        stack.push_back(next);
      }
    }
  }

  std::optional<std::pair<std::size_t, std::size_t>> find_entering() const {
    for (std::size_t r = 0; r < m_; ++r) {
      for (std::size_t c = 0; c < k_; ++c) {
        const double reduced = cost(r, c) - (u_[r] - v_[c]);
        if (reduced < -cost_tol_) return std::make_pair(r, c);
      }
    }
    return std::nullopt;
  }

  bool before(const Cell& a, const Cell& b) const {
    const auto ka = std::make_pair(tp_.rows[a.r], tp_.cols[a.c]);
    const auto kb = std::make_pair(tp_.rows[b.r], tp_.cols[b.c]);
    return ka < kb;
  }

  void pivot(std::size_t r, std::size_t c) {
    // Tree path from column node back to row node closes the cycle.
    const auto adj = adjacency();
    const std::size_t source = r;
    const std::size_t target = m_ + c;
    std::vector<std::size_t> parent_edge(m_ + k_, std::numeric_limits<std::size_t>::max());
    std::vector<bool> seen(m_ + k_, false);
    std::vector<std::size_t> stack{source};
    seen[source] = true;
    while (!stack.empty() && !seen[target]) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t e : adj[node]) {
        const std::size_t next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = true;
        parent_edge[next] = e;
        stack.push_back(next);
      }
    }
    std::vector<std::size_t> path;  // ordered from the column end
    for (std::size_t node = target; node != source;) {
      const std::size_t e = parent_edge[node];
      path.push_back(e);
      node = other_end(e, node);
    }

    // Cells at even positions lose flow.
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < path.size(); p += 2) theta = std::min(theta, basis_[path[p]].flow);
    std::size_t leaving = path[0];
    bool have = false;
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const Cell& cell = basis_[path[p]];
      if (cell.flow <= theta + snap_ && (!have || before(cell, basis_[leaving]))) {
        leaving = path[p];
        have = true;
      }
    }
    for (std::size_t p = 0; p < path.size(); ++p) {
      Cell& cell = basis_[path[p]];
      cell.flow += (p % 2 == 0) ? -theta : theta;
      if (std::abs(cell.flow) <= snap_) cell.flow = 0.0;
    }
    basis_[leaving] = {r, c, theta};
  }

  const StationGraph& graph_;
  const TransportProblem& tp_;
  std::size_t m_;
  std::size_t k_;
  double snap_ = 0.0;
  double cost_tol_ = 0.0;
  std::vector<Cell> basis_;
  std::vector<double> u_;
  std::vector<double> v_;
};

// Smallest a_k compatible with every already-assigned dual.
void extend_duals(const StationGraph& graph, std::vector<double>& duals, std::vector<bool>& assigned) {
  const std::size_t n = graph.size();
  if (std::none_of(assigned.begin(), assigned.end(), [](bool a) { return a; }) && n > 0) {
    duals[0] = 0.0;
    assigned[0] = true;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (assigned[k]) continue;
    double lo = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (assigned[j]) lo = std::max(lo, duals[j] - graph.tau(j, k));
    }
    duals[k] = lo;
    assigned[k] = true;
  }
}

}  // namespace

double flow_tolerance(const NetFlowVector& b) { return 1e-9 * std::max(1.0, b.l1_norm()); }

double dual_objective(const std::vector<double>& duals, const NetFlowVector& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) sum += duals[i] * b[i];
  return sum;
}

RebalanceSolution min_cost_rebalance(const StationGraph& graph, const NetFlowVector& b) {
  const std::size_t n = graph.size();
  if (b.size() != n) throw ValidationError("net flow vector size does not match station count");

  RebalanceSolution sol;
  sol.flows = Matrix<double>::square(n, 0.0);
  sol.duals.assign(n, 0.0);
  std::vector<bool> assigned(n, false);

  const TransportProblem tp = make_transport(b);
  if (!tp.rows.empty()) {
    TransportationSimplex simplex(graph, tp);
    simplex.solve();
    for (const Cell& cell : simplex.basis()) {
      sol.flows(tp.rows[cell.r], tp.cols[cell.c]) = std::max(0.0, cell.flow);
    }
    for (std::size_t r = 0; r < tp.rows.size(); ++r) {
      sol.duals[tp.rows[r]] = simplex.row_potential(r);
      assigned[tp.rows[r]] = true;
    }
    for (std::size_t c = 0; c < tp.cols.size(); ++c) {
      sol.duals[tp.cols[c]] = simplex.col_potential(c);
      assigned[tp.cols[c]] = true;
    }
  }
  extend_duals(graph, sol.duals, assigned);

  const double eps = flow_tolerance(b);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      sol.cost += graph.tau(i, j) * sol.flows(i, j);
      if (sol.flows(i, j) > eps) sol.support.push_back({i, j, sol.flows(i, j)});
    }
  }
  return n == 0 ? sol : normalize_duals(std::move(sol), 0);
}

double rebalancing_cost(const StationGraph& graph, const NetFlowVector& b) {
  return min_cost_rebalance(graph, b).cost;
}

RebalanceSolution normalize_duals(RebalanceSolution solution, std::size_t anchor) {
  if (anchor >= solution.duals.size()) throw ValidationError("anchor station out of range");
  const double shift = solution.duals[anchor];
  for (double& a : solution.duals) a -= shift;
  return solution;
}

double brute_force_rc(const StationGraph& graph, const NetFlowVector& b) {
  const std::size_t n = graph.size();
  if (n > 6) throw ValidationError("brute_force_rc supports at most 6 stations");
  if (b.size() != n) throw ValidationError("net flow vector size does not match station count");

  const TransportProblem tp = make_transport(b);
  if (tp.rows.empty()) return 0.0;
  const std::size_t m = tp.rows.size();
  const std::size_t k = tp.cols.size();
  const std::size_t cells = m * k;
  const std::size_t basis_size = m + k - 1;
  const double tol = 1e-9 * std::max(1.0, b.l1_norm());

  double best = std::numeric_limits<double>::infinity();
  // Each subset of cells of the right size that forms a spanning tree is a basis.
  for (std::uint32_t mask = 0; mask < (1u << cells); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != basis_size) continue;
    std::vector<std::pair<std::size_t, std::size_t>> tree;
    std::vector<std::size_t> parent(m + k);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    bool acyclic = true;
    for (std::size_t cell = 0; cell < cells && acyclic; ++cell) {
      if (!(mask & (1u << cell))) continue;
      const std::size_t r = cell / k;
      const std::size_t c = cell % k;
      const std::size_t a = find(r);
      const std::size_t z = find(m + c);
      if (a == z) acyclic = false;
      parent[a] = z;
      tree.emplace_back(r, c);
    }
    if (!acyclic) continue;

    // Leaf peeling determines the unique tree flows.
    std::vector<double> residual(m + k);
    for (std::size_t r = 0; r < m; ++r) residual[r] = tp.supply[r];
    for (std::size_t c = 0; c < k; ++c) residual[m + c] = tp.demand[c];
    std::vector<bool> used(tree.size(), false);
    std::vector<double> flow(tree.size(), 0.0);
    for (std::size_t round = 0; round < tree.size(); ++round) {
      std::vector<std::size_t> degree(m + k, 0);
      for (std::size_t e = 0; e < tree.size(); ++e) {
        if (used[e]) continue;
        ++degree[tree[e].first];
        ++degree[m + tree[e].second];
      }
      for (std::size_t e = 0; e < tree.size(); ++e) {
        if (used[e]) continue;
        const std::size_t r = tree[e].first;
        const std::size_t c = m + tree[e].second;
        const std::size_t leaf = degree[r] == 1 ? r : (degree[c] == 1 ? c : m + k);
        if (leaf == m + k) continue;
        const std::size_t other = leaf == r ? c : r;
        flow[e] = residual[leaf];
        residual[other] -= flow[e];
        residual[leaf] = 0.0;
        used[e] = true;
        break;
      }
    }
    if (std::any_of(flow.begin(), flow.end(), [&](double f) { return f < -tol; })) continue;
    double total = 0.0;
    for (std::size_t e = 0; e < tree.size(); ++e) {
      total += flow[e] * graph.tau(tp.rows[tree[e].first], tp.cols[tree[e].second]);
    }
    best = std::min(best, total);
  }
  return best;
}

}  // namespace modfrag
