#include "modfrag/adversarial.hpp"

#include <set>
#include <stdexcept>

#include "modfrag/circulation.hpp"
#include "modfrag/errors.hpp"
#include "modfrag/parallel.hpp"
#include "modfrag/rng.hpp"

namespace modfrag {
namespace {

// Corner over the demand edges, one byte per edge.
using Corner = std::vector<std::uint8_t>;

class SplitEvaluator {
 public:
  SplitEvaluator(const StationGraph& graph, const DemandMatrix& demand)
      : graph_(graph), demand_(demand), edges_(demand_edges(demand)) {
    if (demand.size() != graph.size()) throw ValidationError("demand size does not match station count");
    whole_rc_ = rebalancing_cost(graph, net_flow(demand));
  }

  const std::vector<DemandEdge>& edges() const { return edges_; }

  NetFlowVector firm_net(const Corner& c, std::uint8_t side) const {
    std::vector<double> b(demand_.size(), 0.0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      if (c[e] != side) continue;
      const double v = static_cast<double>(demand_.count(edges_[e].from, edges_[e].to));
      b[edges_[e].from] += v;
      b[edges_[e].to] -= v;
    }
    return NetFlowVector(std::move(b));
  }

  double value(const Corner& c) const {
    return rebalancing_cost(graph_, firm_net(c, 1)) + rebalancing_cost(graph_, firm_net(c, 0)) - whole_rc_;
  }

  // One sign-rounding step. Returns the next corner.
  Corner step(const Corner& c) const {
    const auto a = min_cost_rebalance(graph_, firm_net(c, 1)).duals;
    const auto b = min_cost_rebalance(graph_, firm_net(c, 0)).duals;
    const double tol = 1e-9 * std::max(1.0, graph_.max_cost());
    Corner next = c;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const std::size_t i = edges_[e].from;
      const std::size_t j = edges_[e].to;
      const double g = static_cast<double>(demand_.count(i, j)) * ((a[i] - a[j]) - (b[i] - b[j]));
      if (g > tol) {
        next[e] = 1;
      } else if (g < -tol) {
        next[e] = 0;
      }
    }
    return next;
  }

  Corner corner_of(const SplitIndicator& kappa) const {
    Corner c(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) c[e] = kappa(edges_[e].from, edges_[e].to);
    return c;
  }

  SplitIndicator indicator_of(const Corner& c) const {
    auto k = SplitIndicator::square(demand_.size(), 0);
    for (std::size_t e = 0; e < edges_.size(); ++e) k(edges_[e].from, edges_[e].to) = c[e];
    return k;
  }

 private:
  const StationGraph& graph_;
  const DemandMatrix& demand_;
  std::vector<DemandEdge> edges_;
  double whole_rc_ = 0.0;
};

struct RestartRun {
  Corner best;
  RestartTrace trace;
};

RestartRun run_restart(const SplitEvaluator& eval, Corner start, std::size_t max_iters) {
  RestartRun run;
  run.best = start;
  run.trace.initial_value = run.trace.best_value = eval.value(start);
  std::set<Corner> visited{start};
  Corner current = std::move(start);
  for (std::size_t it = 0; it < max_iters; ++it) {
    Corner next = eval.step(current);
    run.trace.iterations = it + 1;
    if (next == current) {
      run.trace.stop = StopReason::kFixedPoint;
      return run;
    }
    if (!visited.insert(next).second) {
      run.trace.stop = StopReason::kCycle;
      return run;
    }
    const double v = eval.value(next);
    if (v > run.trace.best_value) {
      run.trace.best_value = v;
      run.best = next;
    }
    current = std::move(next);
  }
  run.trace.stop = StopReason::kMaxIters;
  return run;
}

}  // namespace

std::vector<DemandEdge> demand_edges(const DemandMatrix& demand) {
  std::vector<DemandEdge> edges;
  for (std::size_t i = 0; i < demand.size(); ++i) {
    for (std::size_t j = 0; j < demand.size(); ++j) {
      if (demand.count(i, j) > 0) edges.push_back({i, j});
    }
  }
  return edges;
}

void check_split_indicator(const DemandMatrix& demand, const SplitIndicator& kappa) {
  const std::size_t n = demand.size();
  if (kappa.rows() != n || kappa.cols() != n) throw ValidationError("split indicator size does not match demand");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = kappa(i, j);
      if (v > 1) throw ValidationError("split indicator must be binary");
      if (v == 1 && demand.count(i, j) == 0) {
        throw ValidationError("split indicator set on edge (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") without demand");
      }
    }
  }
}

double pof_of_split(const StationGraph& graph, const DemandMatrix& demand, const SplitIndicator& kappa) {
  check_split_indicator(demand, kappa);
  const SplitEvaluator eval(graph, demand);
  return eval.value(eval.corner_of(kappa));
}

double pof_of_fractional_split(const StationGraph& graph, const DemandMatrix& demand, const Matrix<double>& w) {
  const std::size_t n = demand.size();
  if (n != graph.size()) throw ValidationError("demand size does not match station count");
  if (w.rows() != n || w.cols() != n) throw ValidationError("split weights size does not match demand");
  auto a = Matrix<double>::square(n, 0.0);
  auto b = Matrix<double>::square(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = w(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("split weights must lie in [0, 1]");
      const auto d = static_cast<double>(demand.count(i, j));
      a(i, j) = v * d;
      b(i, j) = (1.0 - v) * d;
    }
  }
  return rebalancing_cost(graph, net_flow(a)) + rebalancing_cost(graph, net_flow(b)) -
         rebalancing_cost(graph, net_flow(demand));
}

SplitIndicator full_split(const DemandMatrix& demand) {
  auto k = SplitIndicator::square(demand.size(), 0);
  for (const auto& e : demand_edges(demand)) k(e.from, e.to) = 1;
  return k;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kFixedPoint:
      return "fixed-point";
    case StopReason::kCycle:
      return "cycle";
    case StopReason::kMaxIters:
      return "max-iters";
  }
  return "unknown";
}

AdversarialResult adversarial_subgradient(const StationGraph& graph, const DemandMatrix& demand,
                                          const SplitIndicator& init, const SubgradientOptions& options) {
  if (options.max_iters < 1) throw ValidationError("max_iters must be >= 1");
  check_split_indicator(demand, init);
  const SplitEvaluator eval(graph, demand);
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);

  std::vector<Corner> starts(restarts);
  starts[0] = eval.corner_of(init);
  for (std::size_t r = 1; r < restarts; ++r) {
    starts[r].resize(eval.edges().size());
    for (std::size_t e = 0; e < eval.edges().size(); ++e) {
      SplitMix64 rng(stream_key(options.seed, r, e));
      starts[r][e] = static_cast<std::uint8_t>(rng.next() >> 63);
    }
  }

  std::vector<RestartRun> runs(restarts);
  parallel_for(restarts, options.threads,
               [&](std::size_t r) { runs[r] = run_restart(eval, starts[r], options.max_iters); });

  AdversarialResult out;
  out.initial_value = runs[0].trace.initial_value;
  for (std::size_t r = 0; r < restarts; ++r) {
    out.restarts.push_back(runs[r].trace);
    if (r == 0 || runs[r].trace.best_value > out.value) {
      out.value = runs[r].trace.best_value;
      out.best_restart = r;
    }
  }
  const auto& best = runs[out.best_restart];
  out.kappa = eval.indicator_of(best.best);
  out.iterations = best.trace.iterations;
  out.stop = best.trace.stop;
  return out;
}

BruteForceResult adversarial_bruteforce(const StationGraph& graph, const DemandMatrix& demand,
                                        std::size_t threads) {
  const SplitEvaluator eval(graph, demand);
  const std::size_t m = eval.edges().size();
  if (m > kMaxBruteForceEdges) {
    throw ValidationError("brute force supports at most " + std::to_string(kMaxBruteForceEdges) +
                          " demand edges, instance has " + std::to_string(m));
  }
  BruteForceResult out;
  out.edges = m;
  if (m == 0) {
    out.kappa = SplitIndicator::square(demand.size(), 0);
    return out;
  }
  // Corner index c maps to edge e taking bit e; bit 0 is pinned to 1.
  const std::uint64_t half = std::uint64_t{1} << (m - 1);
  out.corners = half;
  const std::size_t chunks = std::min<std::uint64_t>(half, 64);
  struct Best {
    std::uint64_t index = 0;
    double value = -1.0;
  };
  std::vector<Best> best(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::uint64_t lo = half * c / chunks;
    const std::uint64_t hi = half * (c + 1) / chunks;
    Corner corner(m);
    Best local;
    for (std::uint64_t k = lo; k < hi; ++k) {
      const std::uint64_t bits = (k << 1) | 1;
      for (std::size_t e = 0; e < m; ++e) corner[e] = static_cast<std::uint8_t>((bits >> e) & 1);
      const double v = eval.value(corner);
      if (v > local.value) local = {bits, v};
    }
    best[c] = local;
  });
  Best top = best[0];
  for (std::size_t c = 1; c < chunks; ++c) {
    if (best[c].value > top.value) top = best[c];
  }
  Corner corner(m);
  for (std::size_t e = 0; e < m; ++e) corner[e] = static_cast<std::uint8_t>((top.index >> e) & 1);
  out.kappa = eval.indicator_of(corner);
  out.value = top.value;
  return out;
}

}  // namespace modfrag
