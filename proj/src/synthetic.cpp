#include "modfrag/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "modfrag/errors.hpp"
#include "modfrag/rng.hpp"

namespace modfrag {
namespace {

constexpr double kSpeed = 8.0;  // m/s for dropoff times

std::int64_t travel_seconds(const Point& a, const Point& b) {
  return 60 + static_cast<std::int64_t>(std::llround((std::abs(a.x - b.x) + std::abs(a.y - b.y)) / kSpeed));
}

Point disk_point(SplitMix64& rng, const Point& center, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double t = 2 * std::numbers::pi * rng.uniform();
  return {center.x + r * std::cos(t), center.y + r * std::sin(t)};
}

Point jitter(SplitMix64& rng, const Point& p, double sigma) {
  const double dx = sigma * rng.normal();
  const double dy = sigma * rng.normal();
  return {p.x + dx, p.y + dy};
}

void sort_by_pickup(std::vector<TripRecord>& trips) {
  std::stable_sort(trips.begin(), trips.end(),
                   [](const TripRecord& a, const TripRecord& b) { return a.pickup_time < b.pickup_time; });
}

}  // namespace

std::vector<TripRecord> generate_two_cluster(const TwoClusterSpec& spec) {
  spec.box.check();
  if (spec.slot_seconds <= 0) throw ValidationError("slot_seconds must be positive");
  if (spec.hotspots_per_cluster < 2) throw ValidationError("need at least 2 hotspots per cluster");
  const Projection proj(spec.box.center());
  const double offset_m = proj.to_plane({spec.box.center().lon + spec.cluster_offset_deg, spec.box.center().lat}).x;
  const Point centers[2] = {{-offset_m, 0.0}, {offset_m, 0.0}};

  std::vector<Point> hotspots[2];
  {
    SplitMix64 rng(stream_key(spec.seed, 0, 0));
    for (int c = 0; c < 2; ++c) {
      for (std::size_t h = 0; h < spec.hotspots_per_cluster; ++h) {
        hotspots[c].push_back(disk_point(rng, centers[c], spec.hotspot_radius_m));
      }
    }
  }
  const std::int64_t start = spec.start_time - ((spec.start_time % spec.slot_seconds) + spec.slot_seconds) %
                                                   spec.slot_seconds;

  std::vector<TripRecord> trips;
  trips.reserve(spec.trips);
  auto emit = [&](SplitMix64& rng, std::int64_t slot_start, const Point& from, const Point& to) {
    const Point a = jitter(rng, from, spec.jitter_m);
    const Point b = jitter(rng, to, spec.jitter_m);
    TripRecord t;
    t.pickup_time = slot_start + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(spec.slot_seconds)));
    t.dropoff_time = t.pickup_time + travel_seconds(a, b);
    t.pickup = proj.to_geo(a);
    t.dropoff = proj.to_geo(b);
    trips.push_back(t);
  };

  const std::size_t hs = spec.hotspots_per_cluster;
  for (std::uint64_t slot = 0; trips.size() < spec.trips; ++slot) {
    SplitMix64 rng(stream_key(spec.seed, slot + 1, 0));
    const std::int64_t slot_start = start + static_cast<std::int64_t>(slot) * spec.slot_seconds;
    const std::int64_t pairs = 1 + sample_poisson(rng, spec.extra_pairs_per_slot);
    for (std::int64_t p = 0; p < pairs && spec.trips - trips.size() >= 2; ++p) {
      const auto& a0 = hotspots[0][rng.below(hs)];
      const auto& b0 = hotspots[1][rng.below(hs)];
      const auto& b1 = hotspots[1][rng.below(hs)];
      const auto& a1 = hotspots[0][rng.below(hs)];
      emit(rng, slot_start, a0, b0);
      emit(rng, slot_start, b1, a1);
    }
    for (int c = 0; c < 2; ++c) {
      const std::int64_t m = sample_poisson(rng, spec.internal_per_slot);
      for (std::int64_t q = 0; q < m && trips.size() < spec.trips; ++q) {
        const std::size_t o = rng.below(hs);
        const std::size_t d = (o + 1 + rng.below(hs - 1)) % hs;
        emit(rng, slot_start, hotspots[c][o], hotspots[c][d]);
      }
    }
    // A lone remaining row cannot be a pair.
    if (spec.trips - trips.size() == 1) {
      emit(rng, slot_start, hotspots[0][0], hotspots[0][1]);
    }
  }
  sort_by_pickup(trips);
  return trips;
}

PlantedCorpus generate_planted(const PlantedSpec& spec) {
  spec.box.check();
  if (spec.hotspots < 2) throw ValidationError("need at least 2 hotspots");
  if (!(spec.max_rate >= 0.0)) throw ValidationError("max_rate must be nonnegative");
  const Projection proj(spec.box.center());
  PlantedCorpus out;
  out.start_time = spec.start_time - ((spec.start_time % 3600) + 3600) % 3600;
  SplitMix64 rng(stream_key(spec.seed, 0, 0));
  // Hotspots on a ring of 5 km so they stay well separated.
  for (std::size_t h = 0; h < spec.hotspots; ++h) {
    const double t = 2 * std::numbers::pi * static_cast<double>(h) / static_cast<double>(spec.hotspots);
    out.hotspots.push_back(proj.to_geo({5000.0 * std::cos(t), 5000.0 * std::sin(t)}));
  }
  out.rates = Matrix<double>::square(spec.hotspots, 0.0);
  for (std::size_t i = 0; i < spec.hotspots; ++i) {
    for (std::size_t j = 0; j < spec.hotspots; ++j) {
      if (i != j) out.rates(i, j) = spec.max_rate * rng.uniform();
    }
  }
  for (std::size_t hour = 0; hour < spec.hours; ++hour) {
    const std::int64_t hour_start = out.start_time + static_cast<std::int64_t>(hour) * 3600;
    for (std::size_t i = 0; i < spec.hotspots; ++i) {
      for (std::size_t j = 0; j < spec.hotspots; ++j) {
        if (i == j) continue;
        SplitMix64 edge_rng(stream_key(spec.seed, hour + 1, i * spec.hotspots + j));
        const std::int64_t m = sample_poisson(edge_rng, out.rates(i, j));
        const Point a = proj.to_plane(out.hotspots[i]);
        const Point b = proj.to_plane(out.hotspots[j]);
        for (std::int64_t q = 0; q < m; ++q) {
          TripRecord t;
          t.pickup_time = hour_start + static_cast<std::int64_t>(edge_rng.below(3600));
          t.dropoff_time = t.pickup_time + travel_seconds(a, b);
          t.pickup = out.hotspots[i];
          t.dropoff = out.hotspots[j];
          out.trips.push_back(t);
        }
      }
    }
  }
  sort_by_pickup(out.trips);
  return out;
}

}  // namespace modfrag
