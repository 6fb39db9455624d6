#include "modfrag/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "modfrag/errors.hpp"

namespace modfrag {

std::string GraphReport::summary(std::size_t max_items) const {
  if (ok()) return "valid";
  std::ostringstream os;
  os << entries.size() << " entry violation(s), " << triangle.size()
     << " triangle violation(s)";
  std::size_t shown = 0;
  for (const auto& e : entries) {
    if (shown++ >= max_items) break;
    os << "; tau[" << e.i << "][" << e.j << "]=" << e.value << " " << e.reason;
  }
  for (const auto& t : triangle) {
    if (shown++ >= max_items) break;
    os << "; tau[" << t.from << "][" << t.to << "]=" << t.direct << " > tau[" << t.from
       << "][" << t.via << "]+tau[" << t.via << "][" << t.to << "]=" << t.detour;
  }
  return os.str();
}

GraphReport validate_graph(const Matrix<double>& tau) {
  GraphReport report;
  const std::size_t n = tau.rows();
  if (tau.cols() != n) {
    report.entries.push_back({0, 0, 0.0, "matrix is not square"});
    return report;
  }
  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = tau(i, j);
      if (!std::isfinite(v)) {
        report.entries.push_back({i, j, v, "is not finite"});
      } else if (i == j && v != 0.0) {
        report.entries.push_back({i, j, v, "diagonal must be zero"});
      } else if (v < 0.0) {
        report.entries.push_back({i, j, v, "is negative"});
      } else {
        scale = std::max(scale, v);
      }
    }
  }
  if (!report.entries.empty()) return report;

  // Absorbs round-off in sums of metric distances.
  const double tol = 1e-9 * scale;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || j == k) continue;
        const double detour = tau(i, k) + tau(k, j);
        if (tau(i, j) > detour + tol) report.triangle.push_back({i, k, j, tau(i, j), detour});
      }
    }
  }
  return report;
}

StationGraph::StationGraph(Matrix<double> tau, std::vector<Point> coords)
    : tau_(std::move(tau)), coords_(std::move(coords)) {
  if (!coords_.empty() && coords_.size() != tau_.rows()) {
    throw ValidationError("coordinate count does not match station count");
  }
  const GraphReport report = validate_graph(tau_);
  if (!report.ok()) throw ValidationError("invalid station graph: " + report.summary());
  for (double v : tau_.values()) max_cost_ = std::max(max_cost_, v);
}

GraphReport validate_graph(const StationGraph& graph) { return validate_graph(graph.costs()); }

DemandMatrix::DemandMatrix(std::size_t n) : counts_(Matrix<std::int64_t>::square(n, 0)) {}

DemandMatrix::DemandMatrix(Matrix<std::int64_t> counts, std::optional<TimeWindow> window)
    : counts_(std::move(counts)), window_(window) {
  if (counts_.rows() != counts_.cols()) throw ValidationError("demand matrix is not square");
  for (std::size_t i = 0; i < counts_.rows(); ++i) {
    for (std::size_t j = 0; j < counts_.cols(); ++j) {
      if (counts_(i, j) < 0) {
        throw ValidationError("negative demand count at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      }
    }
    dropped_diagonal_ += counts_(i, i);
    counts_(i, i) = 0;
  }
}

std::int64_t DemandMatrix::total() const {
  std::int64_t sum = 0;
  for (auto v : counts_.values()) sum += v;
  return sum;
}

std::size_t DemandMatrix::positive_edges() const {
  return static_cast<std::size_t>(
      std::count_if(counts_.values().begin(), counts_.values().end(), [](auto v) { return v > 0; }));
}

double balance_tolerance(const std::vector<double>& values) {
  double l1 = 0.0;
  for (double v : values) l1 += std::abs(v);
  return 1e-9 * std::max(1.0, l1);
}

NetFlowVector::NetFlowVector(std::vector<double> values) : values_(std::move(values)) {
  double sum = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("net flow entry is not finite");
    sum += v;
  }
  if (std::abs(sum) > balance_tolerance(values_)) {
    std::ostringstream os;
    os << "unbalanced net flow vector: sum = " << sum;
    throw ValidationError(os.str());
  }
}

double NetFlowVector::l1_norm() const {
  double l1 = 0.0;
  for (double v : values_) l1 += std::abs(v);
  return l1;
}

bool NetFlowVector::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

std::vector<std::int64_t> net_flow_exact(const DemandMatrix& demand) {
  const std::size_t n = demand.size();
  std::vector<std::int64_t> b(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      b[i] += demand.count(i, j);
      b[j] -= demand.count(i, j);
    }
  }
  return b;
}

NetFlowVector net_flow(const DemandMatrix& demand) {
  const auto exact = net_flow_exact(demand);
  return NetFlowVector(std::vector<double>(exact.begin(), exact.end()));
}

NetFlowVector net_flow(const Matrix<double>& demand) {
  if (demand.rows() != demand.cols()) throw ValidationError("demand matrix is not square");
  const std::size_t n = demand.rows();
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      b[i] += demand(i, j);
      b[j] -= demand(i, j);
    }
  }
  return NetFlowVector(std::move(b));
}

DemandMatrix scale_demand(const DemandMatrix& demand, std::int64_t theta) {
  if (theta < 1) throw ValidationError("scale factor theta must be >= 1");
  Matrix<std::int64_t> scaled = demand.counts();
  for (auto& v : scaled.values()) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(v, theta, &out)) {
      throw std::overflow_error("demand scaling overflows int64");
    }
    v = out;
  }
  return DemandMatrix(std::move(scaled), demand.window());
}

Matrix<double> manhattan_matrix(const std::vector<Point>& points) {
  const std::size_t n = points.size();
  auto tau = Matrix<double>::square(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      tau(i, j) = std::abs(points[i].x - points[j].x) + std::abs(points[i].y - points[j].y);
    }
  }
  return tau;
}

}  // namespace modfrag
