#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "modfrag/adversarial.hpp"
#include "modfrag/circulation.hpp"
#include "modfrag/errors.hpp"
#include "modfrag/pof.hpp"
#include "modfrag/regime.hpp"
#include "modfrag/splitting.hpp"
#include "modfrag/synthetic.hpp"
#include "modfrag/trips.hpp"

namespace py = pybind11;
using namespace modfrag;

namespace {

using Rows = std::vector<std::vector<double>>;
using Counts = std::vector<std::vector<std::int64_t>>;

template <typename T>
Matrix<T> to_matrix(const std::vector<std::vector<T>>& rows, const char* what) {
  const std::size_t n = rows.size();
  auto m = Matrix<T>::square(n, T{});
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw ValidationError(std::string(what) + " must be square");
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

template <typename T>
std::vector<std::vector<T>> to_rows(const Matrix<T>& m) {
  std::vector<std::vector<T>> out(m.rows(), std::vector<T>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

StationGraph graph_of(const Rows& tau) { return StationGraph(to_matrix(tau, "tau")); }
DemandMatrix demand_of(const Counts& counts) { return DemandMatrix(to_matrix(counts, "counts")); }

// A float is a two-firm share, an int a number of equal firms, a flat list
// scalar shares, a square nested list a per-edge share of firm a.
MarketShares shares_of(const py::object& obj) {
  if (obj.is_none()) return MarketShares::homogeneous(0.5);
  if (py::isinstance<py::bool_>(obj)) throw ValidationError("shares must be a number or a list");
  if (py::isinstance<py::int_>(obj)) return MarketShares::equal(obj.cast<std::size_t>());
  if (py::isinstance<py::float_>(obj)) return MarketShares::homogeneous(obj.cast<double>());
  const auto seq = obj.cast<py::sequence>();
  if (seq.size() > 0 && py::isinstance<py::sequence>(seq[0])) {
    return MarketShares::heterogeneous(to_matrix(obj.cast<Rows>(), "rho matrix"));
  }
  return MarketShares::scalar(obj.cast<std::vector<double>>());
}

SplitFamily family_of(const std::string& name) {
  if (name == "binomial") return SplitFamily::kBinomial;
  if (name == "poisson") return SplitFamily::kPoissonDemand;
  throw ValidationError("family must be 'binomial' or 'poisson'");
}

py::dict estimate_dict(const PofEstimate& e) {
  py::dict d;
  d["theta"] = e.theta;
  d["gamma_mean"] = e.gamma_mean;
  d["gamma_stderr"] = e.gamma_stderr;
  d["gamma_over_theta"] = e.gamma_over_theta();
  d["trials"] = e.trials;
  d["monopolist_rc"] = e.monopolist_rc;
  d["firm_mean_rc"] = e.firm_mean_rc;
  return d;
}

py::dict solve(const Rows& tau, const Counts& counts) {
  const auto g = graph_of(tau);
  const auto s = min_cost_rebalance(g, net_flow(demand_of(counts)));
  py::list support;
  for (const auto& e : s.support) support.append(py::make_tuple(e.from, e.to, e.flow));
  py::dict d;
  d["cost"] = s.cost;
  d["flows"] = to_rows(s.flows);
  d["duals"] = s.duals;
  d["support"] = support;
  return d;
}

py::dict classify(const Rows& tau, const Counts& counts, const py::object& shares, const std::string& method) {
  DualRangeMethod m = DualRangeMethod::kShortestPath;
  if (method == "simplex") {
    m = DualRangeMethod::kSimplex;
  } else if (method != "shortest-path") {
    throw ValidationError("method must be 'shortest-path' or 'simplex'");
  }
  const auto label = classify_regime(graph_of(tau), demand_of(counts), shares_of(shares), m);
  py::dict d;
  d["kind"] = to_string(label.kind);
  d["monopolist_cost"] = label.monopolist_cost;
  d["components"] = label.certificate.support.components;
  d["max_range_width"] = label.certificate.max_range_width;
  d["dual_degenerate"] = label.certificate.dual_degenerate;
  d["cross_demand"] = label.certificate.cross_demand;
  if (label.heterogeneity_gap) {
    d["heterogeneity_gap"] = *label.heterogeneity_gap;
  } else {
    d["heterogeneity_gap"] = py::none();
  }
  return d;
}

py::dict sweep(const Rows& tau, const Counts& counts, const std::vector<std::int64_t>& thetas, std::size_t trials,
               std::uint64_t seed, std::size_t threads, const py::object& shares, const std::string& family) {
  const auto curve = scaling_sweep(graph_of(tau), demand_of(counts), {family_of(family), shares_of(shares)},
                                   thetas, {trials, seed, threads});
  py::list points;
  for (const auto& p : curve.points) points.append(estimate_dict(p));
  py::dict d;
  d["points"] = points;
  d["fitted"] = curve.fit.status == SlopeStatus::kFitted;
  d["slope"] = curve.fit.slope;
  d["ci"] = py::make_tuple(curve.fit.ci_low, curve.fit.ci_high);
  d["regime_hint"] = curve.regime_hint;
  d["csv"] = curve_to_csv(curve);
  return d;
}

py::dict adversarial(const Rows& tau, const Counts& counts, std::size_t restarts, std::size_t max_iters,
                     std::uint64_t seed, std::size_t threads, bool bruteforce) {
  const auto g = graph_of(tau);
  const auto dm = demand_of(counts);
  const auto r = adversarial_subgradient(g, dm, full_split(dm), {max_iters, restarts, seed, threads});
  py::dict d;
  d["value"] = r.value;
  d["kappa"] = to_rows(r.kappa);
  d["iterations"] = r.iterations;
  d["stop"] = to_string(r.stop);
  d["best_restart"] = r.best_restart;
  if (bruteforce) {
    const auto bf = adversarial_bruteforce(g, dm, threads);
    d["bruteforce_value"] = bf.value;
    d["bruteforce_kappa"] = to_rows(bf.kappa);
  }
  return d;
}

std::string two_cluster_csv(std::size_t rows, std::uint64_t seed) {
  TwoClusterSpec spec;
  spec.trips = rows;
  spec.seed = seed;
  std::ostringstream os;
  write_trips_csv(os, generate_two_cluster(spec));
  return os.str();
}

py::dict survey(const std::string& csv, const std::vector<std::size_t>& stations,
                const std::vector<std::int64_t>& windows, std::uint64_t seed, std::size_t threads) {
  std::istringstream in(csv);
  const auto load = parse_trips(in, BoundingBox{});
  SurveyOptions opt;
  opt.seed = seed;
  opt.threads = threads;
  const auto cells = degeneracy_survey(load.trips, stations, windows, opt);
  py::list out;
  for (const auto& c : cells) {
    py::dict d;
    d["stations"] = c.stations;
    d["window_minutes"] = c.window_minutes;
    d["n_windows"] = c.n_windows;
    d["n_disconnected"] = c.n_disconnected;
    d["n_affected"] = c.n_affected;
    d["p_affected"] = c.p_affected;
    d["ci"] = py::make_tuple(c.ci_low, c.ci_high);
    out.append(d);
  }
  py::dict d;
  d["trips"] = load.trips.size();
  d["malformed"] = load.report.malformed;
  d["cells"] = out;
  d["csv"] = survey_to_csv(cells);
  return d;
}

}  // namespace

PYBIND11_MODULE(_modfrag, m) {
  m.doc() = "Rebalancing cost and fragmentation analysis for shared-mobility networks";

  m.def("rebalancing_cost", [](const Rows& tau, const Counts& counts) {
    return rebalancing_cost(graph_of(tau), net_flow(demand_of(counts)));
  }, py::arg("tau"), py::arg("counts"));
  m.def("net_flow", [](const Counts& counts) { return net_flow(demand_of(counts)).values(); }, py::arg("counts"));
  m.def("solve", &solve, py::arg("tau"), py::arg("counts"));
  m.def("classify", &classify, py::arg("tau"), py::arg("counts"), py::arg("shares") = py::none(),
        py::arg("method") = "shortest-path");
  m.def("heterogeneity_gap", [](const Rows& tau, const Counts& counts, const py::object& shares) {
    return heterogeneity_gap(graph_of(tau), demand_of(counts), shares_of(shares));
  }, py::arg("tau"), py::arg("counts"), py::arg("shares"));

  m.def("estimate_pof", [](const Rows& tau, const Counts& counts, std::int64_t theta, std::size_t trials,
                           std::uint64_t seed, std::size_t threads, const py::object& shares,
                           const std::string& family) {
    return estimate_dict(estimate_pof(graph_of(tau), demand_of(counts), {family_of(family), shares_of(shares)},
                                      theta, {trials, seed, threads}));
  }, py::arg("tau"), py::arg("counts"), py::arg("theta"), py::arg("trials") = 500, py::arg("seed") = 0,
        py::arg("threads") = 1, py::arg("shares") = py::none(), py::arg("family") = "binomial");
  m.def("scaling_sweep", &sweep, py::arg("tau"), py::arg("counts"), py::arg("thetas"), py::arg("trials") = 500,
        py::arg("seed") = 0, py::arg("threads") = 1, py::arg("shares") = py::none(),
        py::arg("family") = "binomial");
  m.def("two_node_gamma", [](double lambda, double mu, double tau, double rho, double theta) {
    return two_node_closed_form(lambda, mu, tau, rho, theta).gamma;
  }, py::arg("lam"), py::arg("mu"), py::arg("tau"), py::arg("rho"), py::arg("theta"));

  m.def("adversarial", &adversarial, py::arg("tau"), py::arg("counts"), py::arg("restarts") = 8,
        py::arg("max_iters") = 100, py::arg("seed") = 0, py::arg("threads") = 1, py::arg("bruteforce") = false);
  m.def("pof_of_split", [](const Rows& tau, const Counts& counts, const std::vector<std::vector<std::uint8_t>>& k) {
    return pof_of_split(graph_of(tau), demand_of(counts), to_matrix(k, "kappa"));
  }, py::arg("tau"), py::arg("counts"), py::arg("kappa"));

  m.def("two_cluster_csv", &two_cluster_csv, py::arg("rows") = 20000, py::arg("seed") = 0);
  m.def("survey", &survey, py::arg("csv"), py::arg("stations") = std::vector<std::size_t>{10, 20, 40},
        py::arg("windows") = std::vector<std::int64_t>{15, 30, 60}, py::arg("seed") = 0, py::arg("threads") = 1);
}
