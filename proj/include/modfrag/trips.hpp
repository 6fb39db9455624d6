#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "modfrag/core_model.hpp"

namespace modfrag {

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
};

struct BoundingBox {
  double min_lon = -74.30;
  double max_lon = -73.60;
  double min_lat = 40.45;
  double max_lat = 41.05;

  bool contains(const GeoPoint& p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
  }
  GeoPoint center() const { return {(min_lon + max_lon) / 2, (min_lat + max_lat) / 2}; }
  /// Throws ValidationError for an empty or non-finite box.
  void check() const;
};

struct TripRecord {
  std::int64_t pickup_time = 0;  // unix seconds
  std::int64_t dropoff_time = 0;
  GeoPoint pickup;
  GeoPoint dropoff;
};

struct LoadReport {
  std::size_t rows = 0;
  std::size_t parsed = 0;
  /// Wrong field count, unparsable number or timestamp.
  std::size_t malformed = 0;
  std::size_t out_of_box = 0;
  /// dropoff before pickup.
  std::size_t bad_order = 0;
};

struct TripLoad {
  std::vector<TripRecord> trips;
  LoadReport report;
};

/// YYYY-MM-DD[T ]HH:MM:SS[.fraction][Z], always UTC. Fractions are truncated.
std::optional<std::int64_t> parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t unix_seconds);

inline const std::vector<std::string>& trip_columns() {
  static const std::vector<std::string> cols{"pickup_datetime",  "dropoff_datetime",  "pickup_longitude",
                                             "pickup_latitude",  "dropoff_longitude", "dropoff_latitude"};
  return cols;
}

/// Reads the trip CSV. Extra columns are ignored. An empty input gives no
/// trips; a header missing a required column throws ValidationError.
TripLoad parse_trips(std::istream& in, const BoundingBox& box);
/// Throws ValidationError if the file cannot be opened.
TripLoad load_trips(const std::string& path, const BoundingBox& box);

void write_trips_csv(std::ostream& out, const std::vector<TripRecord>& trips);

/// Local equirectangular projection to meters about an origin.
class Projection {
 public:
  static constexpr double kEarthRadius = 6371008.8;
  Projection() : Projection(BoundingBox{}.center()) {}
  explicit Projection(GeoPoint origin);

  Point to_plane(const GeoPoint& p) const;
  GeoPoint to_geo(const Point& p) const;
  const GeoPoint& origin() const { return origin_; }

 private:
  GeoPoint origin_;
  double cos_lat_ = 1.0;
};

class StationClustering {
 public:
  StationClustering() = default;
  StationClustering(std::vector<Point> centroids, Projection projection, double inertia,
                    std::size_t iterations, bool converged);

  std::size_t size() const { return centroids_.size(); }
  const std::vector<Point>& centroids() const { return centroids_; }
  const Projection& projection() const { return projection_; }
  double inertia() const { return inertia_; }
  std::size_t iterations() const { return iterations_; }
  bool converged() const { return converged_; }

  /// Nearest centroid; ties go to the lower index.
  std::size_t assign(const Point& p) const;
  std::size_t assign(const GeoPoint& p) const { return assign(projection_.to_plane(p)); }

 private:
  std::vector<Point> centroids_;
  Projection projection_;
  double inertia_ = 0.0;
  std::size_t iterations_ = 0;
  bool converged_ = false;
};

struct ClusterOptions {
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  std::size_t threads = 1;
  Projection projection;
};

/// k-means++ seeding and Lloyd iterations over all pickup and dropoff points.
/// Converged when no centroid moves by 1e-6 m. An empty cluster keeps its
/// centroid. Throws ValidationError for K < 2 or fewer than K distinct points.
StationClustering cluster_stations(const std::vector<TripRecord>& trips, std::size_t k,
                                   const ClusterOptions& options = {});
/// Same on planar points directly.
StationClustering cluster_points(const std::vector<Point>& points, std::size_t k, const ClusterOptions& options);

/// Symmetric Manhattan distances between centroids, in meters.
StationGraph manhattan_costs(const StationClustering& clustering);

/// Trips with pickup_time in [start, start + length).
DemandMatrix build_demand(const std::vector<TripRecord>& trips, const StationClustering& clustering,
                          const TimeWindow& window);

/// Weak connectivity of {(i, j) : L_ij > 0} over stations carrying demand.
/// False for an empty matrix.
bool demand_graph_connected(const DemandMatrix& demand);

struct SurveyCell {
  std::size_t stations = 0;
  std::int64_t window_minutes = 0;
  std::size_t n_windows = 0;
  std::size_t n_disconnected = 0;
  std::size_t n_affected = 0;
  double p_affected = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct SurveyOptions {
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  std::size_t threads = 1;
  Projection projection;
};

/// Wilson score interval at 95%. For n = 0 returns [0, 1].
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n);

/// One cell per (K, window length), K-major. Stations are clustered once per
/// K. Windows tile [floor(t_min / w) w, t_max] without overlap; windows whose
/// demand graph is empty or not weakly connected are counted in
/// n_disconnected and excluded from p_affected.
std::vector<SurveyCell> degeneracy_survey(const std::vector<TripRecord>& trips,
                                          const std::vector<std::size_t>& station_counts,
                                          const std::vector<std::int64_t>& window_minutes,
                                          const SurveyOptions& options = {});

std::string survey_to_csv(const std::vector<SurveyCell>& cells);

}  // namespace modfrag
