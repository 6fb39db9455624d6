#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "modfrag/matrix.hpp"
#include "modfrag/trips.hpp"

namespace modfrag {

/// Two far-apart clusters of hotspots with dense internal traffic and
/// cross-cluster trips issued in pairs (A -> B and B -> A) inside the same
/// slot, so every window made of whole slots sees balanced cross traffic.
struct TwoClusterSpec {
  /// Exact number of rows produced.
  std::size_t trips = 20000;
  std::uint64_t seed = 0;
  /// Unix seconds; rounded down to a multiple of slot_seconds.
  std::int64_t start_time = 1420070400;  // 2015-01-01T00:00:00Z
  std::int64_t slot_seconds = 300;
  std::size_t hotspots_per_cluster = 8;
  /// Cluster centers sit this far east and west of the box center.
  double cluster_offset_deg = 0.095;
  double hotspot_radius_m = 1500.0;
  double jitter_m = 100.0;
  /// Poisson mean of internal trips per cluster and slot.
  double internal_per_slot = 4.0;
  /// Each slot carries 1 + Poisson(extra_pairs_per_slot) cross pairs.
  double extra_pairs_per_slot = 0.5;
  BoundingBox box;
};

std::vector<TripRecord> generate_two_cluster(const TwoClusterSpec& spec);

/// Fixed hotspots with planted hourly O-D Poisson rates and no jitter.
struct PlantedSpec {
  std::size_t hotspots = 6;
  std::size_t hours = 4;
  std::uint64_t seed = 0;
  std::int64_t start_time = 1420070400;
  /// Rates are drawn uniformly from [0, max_rate] per ordered hotspot pair.
  double max_rate = 30.0;
  BoundingBox box;
};

struct PlantedCorpus {
  std::vector<TripRecord> trips;
  std::vector<GeoPoint> hotspots;
  /// Trips per hour, rates(i, j) for hotspot i to hotspot j.
  Matrix<double> rates;
  std::int64_t start_time = 0;
};

PlantedCorpus generate_planted(const PlantedSpec& spec);

}  // namespace modfrag
