#include "modfrag/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "modfrag/errors.hpp"

namespace modfrag::io {
namespace {

const Json& unwrap(const Json& j, const char* key) {
  if (j.is_object() && j.contains(key) && j.at(key).is_object()) return j.at(key);
  return j;
}

template <typename T>
Matrix<T> matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array of rows");
  std::vector<std::vector<T>> rows;
  for (const auto& row : j) {
    if (!row.is_array()) throw ValidationError(what + " must be an array of rows");
    std::vector<T> r;
    for (const auto& v : row) {
      if (!v.is_number()) throw ValidationError(what + " entries must be numbers");
      if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
          const double d = v.get<double>();
          if (d != std::floor(d)) throw ValidationError(what + " entries must be integers");
          r.push_back(static_cast<T>(d));
        } else {
          r.push_back(v.get<T>());
        }
      } else {
        r.push_back(v.get<T>());
      }
    }
    rows.push_back(std::move(r));
  }
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw ValidationError(what + " must be square");
  }
  return Matrix<T>::from_rows(rows);
}

template <typename T>
Json matrix_to_json(const Matrix<T>& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

void check_n(const Json& j, std::size_t n, const std::string& what) {
  if (j.contains("n") && j.at("n").get<std::size_t>() != n) {
    throw ValidationError(what + ": \"n\" does not match the matrix size");
  }
}

Json ranges_to_json(const std::vector<DualRange>& ranges) {
  Json out = Json::array();
  for (const auto& r : ranges) out.push_back(Json::array({r.min, r.max}));
  return out;
}

}  // namespace

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t stop = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ValidationError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

StationGraph graph_from_json(const Json& root) {
  const Json& j = unwrap(root, "graph");
  try {
    if (!j.contains("tau")) throw ValidationError("graph: missing \"tau\"");
    auto tau = matrix_from_json<double>(j.at("tau"), "graph.tau");
    check_n(j, tau.rows(), "graph");
    std::vector<Point> coords;
    if (j.contains("coords")) {
      for (const auto& c : j.at("coords")) {
        if (!c.is_array() || c.size() != 2) throw ValidationError("graph.coords entries must be [x, y]");
        coords.push_back({c[0].get<double>(), c[1].get<double>()});
      }
      if (coords.size() != tau.rows()) throw ValidationError("graph.coords size does not match tau");
    }
    return StationGraph(std::move(tau), std::move(coords));
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("graph: ") + e.what());
  }
}

Json graph_to_json(const StationGraph& graph) {
  Json j;
  j["n"] = graph.size();
  j["tau"] = matrix_to_json(graph.costs());
  if (!graph.coords().empty()) {
    Json c = Json::array();
    for (const auto& p : graph.coords()) c.push_back(Json::array({p.x, p.y}));
    j["coords"] = std::move(c);
  }
  return j;
}

DemandMatrix demand_from_json(const Json& root) {
  const Json& j = unwrap(root, "demand");
  try {
    if (!j.contains("counts")) throw ValidationError("demand: missing \"counts\"");
    auto counts = matrix_from_json<std::int64_t>(j.at("counts"), "demand.counts");
    check_n(j, counts.rows(), "demand");
    return DemandMatrix(std::move(counts));
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("demand: ") + e.what());
  }
}

Json demand_to_json(const DemandMatrix& demand) {
  Json j;
  j["n"] = demand.size();
  j["counts"] = matrix_to_json(demand.counts());
  if (demand.window()) {
    j["window"] = {{"start", format_iso8601(demand.window()->start)}, {"seconds", demand.window()->length}};
  }
  if (demand.dropped_diagonal() > 0) j["dropped_diagonal"] = demand.dropped_diagonal();
  return j;
}

MarketShares shares_from_json(const Json& root) {
  const Json& j = unwrap(root, "shares");
  try {
    if (j.contains("rho")) return MarketShares::homogeneous(j.at("rho").get<double>());
    if (j.contains("firms")) return MarketShares::equal(j.at("firms").get<std::size_t>());
    if (j.contains("shares")) return MarketShares::scalar(j.at("shares").get<std::vector<double>>());
    if (j.contains("rho_matrix")) {
      return MarketShares::heterogeneous(matrix_from_json<double>(j.at("rho_matrix"), "shares.rho_matrix"));
    }
    if (j.contains("matrices")) {
      std::vector<Matrix<double>> ms;
      for (const auto& m : j.at("matrices")) ms.push_back(matrix_from_json<double>(m, "shares.matrices"));
      return MarketShares::per_edge(std::move(ms));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("shares: ") + e.what());
  }
  throw ValidationError("shares: expected one of rho, firms, shares, rho_matrix, matrices");
}

Json shares_to_json(const MarketShares& shares) {
  Json j;
  if (shares.is_scalar()) {
    j["shares"] = shares.scalar_shares();
  } else {
    Json ms = Json::array();
    for (const auto& m : shares.matrices()) ms.push_back(matrix_to_json(m));
    j["matrices"] = std::move(ms);
  }
  return j;
}

SplitIndicator kappa_from_json(const Json& root) {
  const Json& m = root.is_object() && root.contains("kappa") ? root.at("kappa") : root;
  const auto raw = matrix_from_json<std::int64_t>(m, "kappa");
  auto k = SplitIndicator::square(raw.rows(), 0);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < raw.cols(); ++j) {
      if (raw(i, j) != 0 && raw(i, j) != 1) throw ValidationError("kappa entries must be 0 or 1");
      k(i, j) = static_cast<std::uint8_t>(raw(i, j));
    }
  }
  return k;
}

Json solution_to_json(const RebalanceSolution& solution) {
  Json j;
  j["cost"] = solution.cost;
  j["flows"] = matrix_to_json(solution.flows);
  j["duals"] = solution.duals;
  Json support = Json::array();
  for (const auto& e : solution.support) support.push_back(Json::array({e.from, e.to, e.flow}));
  j["support"] = std::move(support);
  return j;
}

Json label_to_json(const RegimeLabel& label) {
  Json j;
  j["regime"] = to_string(label.kind);
  j["homogeneous_shares"] = label.homogeneous_shares;
  j["monopolist_cost"] = label.monopolist_cost;
  if (label.heterogeneity_gap) {
    j["heterogeneity_gap"] = *label.heterogeneity_gap;
    j["gap_threshold"] = label.gap_threshold;
  }
  if (!label.firm_degenerate.empty()) {
    Json f = Json::array();
    for (bool b : label.firm_degenerate) f.push_back(b);
    j["firm_degenerate"] = std::move(f);
  }
  const auto& c = label.certificate;
  Json cert;
  cert["support_components"] = c.support.components;
  cert["inactive_stations"] = c.support.inactive;
  cert["component_count"] = c.support.components.size();
  cert["all_station_component_count"] = c.support.all_station_count;
  cert["demand_component_count"] = c.demand_component_count;
  cert["dual_ranges"] = ranges_to_json(c.dual_ranges);
  cert["max_range_width"] = c.max_range_width;
  cert["cross_component_demand"] = c.cross_demand;
  cert["dual_degenerate"] = c.dual_degenerate;
  j["certificate"] = std::move(cert);
  return j;
}

Json estimate_to_json(const PofEstimate& e) {
  Json j;
  j["theta"] = e.theta;
  j["trials"] = e.trials;
  j["gamma_mean"] = e.gamma_mean;
  j["gamma_stderr"] = e.gamma_stderr;
  j["gamma_over_theta"] = e.gamma_over_theta();
  j["monopolist_rc"] = e.monopolist_rc;
  j["firm_mean_rc"] = e.firm_mean_rc;
  return j;
}

Json fit_to_json(const SlopeFit& fit) {
  Json j;
  j["status"] = fit.status == SlopeStatus::kFitted ? "fitted" : "indeterminate";
  j["points_used"] = fit.points_used;
  if (fit.status == SlopeStatus::kFitted) {
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["ci"] = Json::array({fit.ci_low, fit.ci_high});
  }
  return j;
}

Json adversarial_to_json(const AdversarialResult& r) {
  Json j;
  j["f"] = r.value;
  j["kappa"] = matrix_to_json(r.kappa);
  j["iterations"] = r.iterations;
  j["stop"] = to_string(r.stop);
  j["best_restart"] = r.best_restart;
  j["initial_value"] = r.initial_value;
  Json rs = Json::array();
  for (const auto& t : r.restarts) {
    rs.push_back({{"initial_value", t.initial_value},
                  {"best_value", t.best_value},
                  {"iterations", t.iterations},
                  {"stop", to_string(t.stop)}});
  }
  j["restarts"] = std::move(rs);
  return j;
}

Json bruteforce_to_json(const BruteForceResult& r) {
  Json j;
  j["f"] = r.value;
  j["kappa"] = matrix_to_json(r.kappa);
  j["edges"] = r.edges;
  j["corners"] = r.corners;
  return j;
}

Json clustering_to_json(const StationClustering& c) {
  Json j;
  j["k"] = c.size();
  j["origin"] = {{"lon", c.projection().origin().lon}, {"lat", c.projection().origin().lat}};
  Json cs = Json::array();
  for (const auto& p : c.centroids()) {
    const GeoPoint g = c.projection().to_geo(p);
    cs.push_back({{"x", p.x}, {"y", p.y}, {"lon", g.lon}, {"lat", g.lat}});
  }
  j["centroids"] = std::move(cs);
  j["inertia"] = c.inertia();
  j["iterations"] = c.iterations();
  j["converged"] = c.converged();
  return j;
}

Json load_report_to_json(const LoadReport& r) {
  return {{"rows", r.rows},
          {"parsed", r.parsed},
          {"malformed", r.malformed},
          {"out_of_box", r.out_of_box},
          {"bad_order", r.bad_order}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace modfrag::io
