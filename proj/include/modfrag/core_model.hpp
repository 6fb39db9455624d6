#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modfrag/matrix.hpp"

namespace modfrag {

struct Point {
  double x = 0.0;  // meters
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct TriangleViolation {
  std::size_t from = 0;
  std::size_t via = 0;
  std::size_t to = 0;
  double direct = 0.0;  // tau[from][to]
  double detour = 0.0;  // tau[from][via] + tau[via][to]
};

struct EntryViolation {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
  std::string reason;
};

/// Everything wrong with a travel-cost matrix. Empty iff the matrix is valid.
struct GraphReport {
  std::vector<EntryViolation> entries;
  std::vector<TriangleViolation> triangle;

  bool ok() const { return entries.empty() && triangle.empty(); }
  std::string summary(std::size_t max_items = 5) const;
};

/// Checks shape, zero diagonal, nonnegativity, finiteness and the triangle
/// inequality. Never throws on bad values; the report lists them.
GraphReport validate_graph(const Matrix<double>& tau);

/// Stations with a directed travel-cost matrix. Validated on construction.
class StationGraph {
 public:
  explicit StationGraph(Matrix<double> tau, std::vector<Point> coords = {});

  std::size_t size() const { return tau_.rows(); }
  double tau(std::size_t i, std::size_t j) const { return tau_(i, j); }
  const Matrix<double>& costs() const { return tau_; }
  const std::vector<Point>& coords() const { return coords_; }
  double max_cost() const { return max_cost_; }

 private:
  Matrix<double> tau_;
  std::vector<Point> coords_;
  double max_cost_ = 0.0;
};

GraphReport validate_graph(const StationGraph& graph);

struct TimeWindow {
  std::int64_t start = 0;   // unix seconds
  std::int64_t length = 0;  // seconds
  bool operator==(const TimeWindow&) const = default;
};

/// Integer origin-destination trip counts for one time window.
///
/// Same-station counts (the diagonal) are dropped on construction and tallied
/// in dropped_diagonal(); rebalancing never serves them.
class DemandMatrix {
 public:
  explicit DemandMatrix(std::size_t n = 0);
  explicit DemandMatrix(Matrix<std::int64_t> counts, std::optional<TimeWindow> window = std::nullopt);

  std::size_t size() const { return counts_.rows(); }
  std::int64_t count(std::size_t i, std::size_t j) const { return counts_(i, j); }
  const Matrix<std::int64_t>& counts() const { return counts_; }
  std::int64_t dropped_diagonal() const { return dropped_diagonal_; }
  const std::optional<TimeWindow>& window() const { return window_; }
  std::int64_t total() const;
  std::size_t positive_edges() const;

  bool operator==(const DemandMatrix& other) const { return counts_ == other.counts_; }

 private:
  Matrix<std::int64_t> counts_;
  std::int64_t dropped_diagonal_ = 0;
  std::optional<TimeWindow> window_;
};

/// Real-valued per-station net flow b with sum(b) = 0.
class NetFlowVector {
 public:
  NetFlowVector() = default;
  /// Throws ValidationError when |sum(b)| exceeds 1e-9 * max(1, ||b||_1).
  explicit NetFlowVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  double l1_norm() const;
  bool is_zero() const;

 private:
  std::vector<double> values_;
};

double balance_tolerance(const std::vector<double>& values);

/// b_i = sum_j (counts[i][j] - counts[j][i]), computed in integers.
std::vector<std::int64_t> net_flow_exact(const DemandMatrix& demand);
NetFlowVector net_flow(const DemandMatrix& demand);
/// Net flow of a real-valued demand matrix (expected or fractional splits).
NetFlowVector net_flow(const Matrix<double>& demand);

/// Multiplies every count by theta. Throws ValidationError for theta < 1 and
/// std::overflow_error if any product leaves the int64 range.
DemandMatrix scale_demand(const DemandMatrix& demand, std::int64_t theta);

Matrix<double> manhattan_matrix(const std::vector<Point>& points);

}  // namespace modfrag
