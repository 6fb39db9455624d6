#include "modfrag/trips.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "modfrag/errors.hpp"
#include "modfrag/parallel.hpp"
#include "modfrag/regime.hpp"
#include "modfrag/rng.hpp"

namespace modfrag {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

double dist2(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

std::size_t nearest(const std::vector<Point>& centroids, const Point& p) {
  std::size_t best = 0;
  double best_d = dist2(centroids[0], p);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = dist2(centroids[c], p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void BoundingBox::check() const {
  if (!(std::isfinite(min_lon) && std::isfinite(max_lon) && std::isfinite(min_lat) && std::isfinite(max_lat))) {
    throw ValidationError("bounding box must be finite");
  }
  if (!(min_lon < max_lon && min_lat < max_lat)) throw ValidationError("bounding box is empty");
}

std::optional<std::int64_t> parse_iso8601(const std::string& text) {
  std::string_view s = trim(text);
  if (s.size() < 19) return std::nullopt;
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) || !parse_int(s.substr(8, 2), d) ||
      !parse_int(s.substr(11, 2), h) || !parse_int(s.substr(14, 2), mi) || !parse_int(s.substr(17, 2), se)) {
    return std::nullopt;
  }
  std::string_view rest = s.substr(19);
  if (!rest.empty() && rest.front() == '.') {
    rest.remove_prefix(1);
    std::size_t digits = 0;
    while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9') ++digits;
    if (digits == 0) return std::nullopt;
    rest.remove_prefix(digits);
  }
  if (rest == "Z") rest = {};
  if (!rest.empty()) return std::nullopt;
  if (h > 23 || mi > 59 || se > 60) return std::nullopt;
  using namespace std::chrono;
  const year_month_day date{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  const auto days = sys_days{date}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + se;
}

std::string format_iso8601(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const std::int64_t days = floor_div(unix_seconds, 86400);
  const std::int64_t secs = unix_seconds - days * 86400;
  const year_month_day date{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()), static_cast<int>(secs / 3600),
                static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return buf;
}

TripLoad parse_trips(std::istream& in, const BoundingBox& box) {
  box.check();
  TripLoad load;
  std::string line;
  if (!std::getline(in, line)) return load;
  const auto header = split_csv(line);
  const auto& wanted = trip_columns();
  std::vector<std::size_t> index(wanted.size());
  std::string missing;
  for (std::size_t c = 0; c < wanted.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), wanted[c]);
    if (it == header.end()) {
      missing += (missing.empty() ? "" : ", ") + wanted[c];
    } else {
      index[c] = static_cast<std::size_t>(it - header.begin());
    }
  }
  if (!missing.empty()) throw ValidationError("trip CSV is missing columns: " + missing);

  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++load.report.rows;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      ++load.report.malformed;
      continue;
    }
    TripRecord r;
    const auto t0 = parse_iso8601(std::string(fields[index[0]]));
    const auto t1 = parse_iso8601(std::string(fields[index[1]]));
    if (!t0 || !t1 || !parse_double(fields[index[2]], r.pickup.lon) || !parse_double(fields[index[3]], r.pickup.lat) ||
        !parse_double(fields[index[4]], r.dropoff.lon) || !parse_double(fields[index[5]], r.dropoff.lat)) {
      ++load.report.malformed;
      continue;
    }
    r.pickup_time = *t0;
    r.dropoff_time = *t1;
    if (!box.contains(r.pickup) || !box.contains(r.dropoff)) {
      ++load.report.out_of_box;
      continue;
    }
    if (r.dropoff_time < r.pickup_time) {
      ++load.report.bad_order;
      continue;
    }
    load.trips.push_back(r);
    ++load.report.parsed;
  }
  return load;
}

TripLoad load_trips(const std::string& path, const BoundingBox& box) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trip file: " + path);
  return parse_trips(in, box);
}

void write_trips_csv(std::ostream& out, const std::vector<TripRecord>& trips) {
  const auto& cols = trip_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  char buf[160];
  for (const auto& t : trips) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.7f,%.7f,%.7f,%.7f\n", format_iso8601(t.pickup_time).c_str(),
                  format_iso8601(t.dropoff_time).c_str(), t.pickup.lon, t.pickup.lat, t.dropoff.lon, t.dropoff.lat);
    out << buf;
  }
}

Projection::Projection(GeoPoint origin) : origin_(origin), cos_lat_(std::cos(origin.lat * std::numbers::pi / 180)) {}

Point Projection::to_plane(const GeoPoint& p) const {
  constexpr double k = std::numbers::pi / 180;
  return {kEarthRadius * cos_lat_ * (p.lon - origin_.lon) * k, kEarthRadius * (p.lat - origin_.lat) * k};
}

GeoPoint Projection::to_geo(const Point& p) const {
  constexpr double k = 180 / std::numbers::pi;
  return {origin_.lon + p.x / (kEarthRadius * cos_lat_) * k, origin_.lat + p.y / kEarthRadius * k};
}

StationClustering::StationClustering(std::vector<Point> centroids, Projection projection, double inertia,
                                     std::size_t iterations, bool converged)
    : centroids_(std::move(centroids)),
      projection_(projection),
      inertia_(inertia),
      iterations_(iterations),
      converged_(converged) {}

std::size_t StationClustering::assign(const Point& p) const { return nearest(centroids_, p); }

StationClustering cluster_points(const std::vector<Point>& points, std::size_t k, const ClusterOptions& options) {
  if (k < 2) throw ValidationError("need at least 2 stations");
  {
    std::vector<std::pair<double, double>> uniq;
    uniq.reserve(points.size());
    for (const auto& p : points) uniq.emplace_back(p.x, p.y);
    std::sort(uniq.begin(), uniq.end());
    const auto distinct = static_cast<std::size_t>(std::unique(uniq.begin(), uniq.end()) - uniq.begin());
    if (distinct < k) {
      throw ValidationError("K = " + std::to_string(k) + " exceeds the " + std::to_string(distinct) +
                            " distinct points");
    }
  }
  const std::size_t n = points.size();

  // k-means++ seeding.
  SplitMix64 rng(stream_key(options.seed, k, 0));
  std::vector<Point> centroids;
  centroids.push_back(points[rng.below(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    const double r = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (d2[i] > 0.0 && acc > r) {
        pick = i;
        break;
      }
    }
    if (pick == n) {
      for (std::size_t i = n; i-- > 0;) {
        if (d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(points[i], centroids.back()));
  }

  std::vector<std::size_t> label(n);
  const std::size_t chunks = std::min<std::size_t>(n, 256);
  auto assign_all = [&] {
    parallel_for(chunks, options.threads, [&](std::size_t c) {
      for (std::size_t i = n * c / chunks; i < n * (c + 1) / chunks; ++i) label[i] = nearest(centroids, points[i]);
    });
  };

  bool converged = false;
  std::size_t it = 0;
  while (it < options.max_iters) {
    assign_all();
    ++it;
    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sx[label[i]] += points[i].x;
      sy[label[i]] += points[i].y;
      ++count[label[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      const Point next{sx[c] / static_cast<double>(count[c]), sy[c] / static_cast<double>(count[c])};
      shift = std::max(shift, std::sqrt(dist2(next, centroids[c])));
      centroids[c] = next;
    }
    if (shift < 1e-6) {
      converged = true;
      break;
    }
  }
  assign_all();
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) inertia += dist2(points[i], centroids[label[i]]);
  return StationClustering(std::move(centroids), options.projection, inertia, it, converged);
}

StationClustering cluster_stations(const std::vector<TripRecord>& trips, std::size_t k,
                                   const ClusterOptions& options) {
  std::vector<Point> points;
  points.reserve(2 * trips.size());
  for (const auto& t : trips) {
    points.push_back(options.projection.to_plane(t.pickup));
    points.push_back(options.projection.to_plane(t.dropoff));
  }
  return cluster_points(points, k, options);
}

StationGraph manhattan_costs(const StationClustering& clustering) {
  return StationGraph(manhattan_matrix(clustering.centroids()), clustering.centroids());
}

DemandMatrix build_demand(const std::vector<TripRecord>& trips, const StationClustering& clustering,
                          const TimeWindow& window) {
  if (window.length <= 0) throw ValidationError("window length must be positive");
  auto counts = Matrix<std::int64_t>::square(clustering.size(), 0);
  for (const auto& t : trips) {
    if (t.pickup_time < window.start || t.pickup_time - window.start >= window.length) continue;
    ++counts(clustering.assign(t.pickup), clustering.assign(t.dropoff));
  }
  return DemandMatrix(std::move(counts), window);
}

bool demand_graph_connected(const DemandMatrix& demand) {
  const std::size_t n = demand.size();
  const auto mask = demand_stations(demand);
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (demand.count(i, j) > 0) parent[find(i)] = find(j);
    }
  }
  std::size_t roots = 0;
  for (std::size_t i = 0; i < n; ++i) roots += (mask[i] && find(i) == i) ? 1 : 0;
  return roots == 1;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n) {
  if (n == 0) return {0.0, 1.0};
  constexpr double z = 1.959964;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

std::vector<SurveyCell> degeneracy_survey(const std::vector<TripRecord>& trips,
                                          const std::vector<std::size_t>& station_counts,
                                          const std::vector<std::int64_t>& window_minutes,
                                          const SurveyOptions& options) {
  if (station_counts.empty() || window_minutes.empty()) throw ValidationError("survey grids must be nonempty");
  for (const auto w : window_minutes) {
    if (w <= 0) throw ValidationError("window length must be positive");
  }
  std::int64_t t_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t t_max = std::numeric_limits<std::int64_t>::min();
  for (const auto& t : trips) {
    t_min = std::min(t_min, t.pickup_time);
    t_max = std::max(t_max, t.pickup_time);
  }

  std::vector<SurveyCell> cells;
  for (const std::size_t k : station_counts) {
    const ClusterOptions copt{options.seed, options.max_iters, options.threads, options.projection};
    const StationClustering clustering = cluster_stations(trips, k, copt);
    const StationGraph graph = manhattan_costs(clustering);
    std::vector<std::size_t> from(trips.size()), to(trips.size());
    for (std::size_t i = 0; i < trips.size(); ++i) {
      from[i] = clustering.assign(trips[i].pickup);
      to[i] = clustering.assign(trips[i].dropoff);
    }

    for (const std::int64_t minutes : window_minutes) {
      SurveyCell cell;
      cell.stations = k;
      cell.window_minutes = minutes;
      if (!trips.empty()) {
        const std::int64_t w = minutes * 60;
        const std::int64_t start = floor_div(t_min, w) * w;
        const auto windows = static_cast<std::size_t>(floor_div(t_max - start, w) + 1);
        std::vector<std::vector<std::size_t>> bucket(windows);
        for (std::size_t i = 0; i < trips.size(); ++i) {
          bucket[static_cast<std::size_t>(floor_div(trips[i].pickup_time - start, w))].push_back(i);
        }
        // 0 = disconnected, 1 = resilient, 2 = affected.
        std::vector<int> verdict(windows, 0);
        parallel_for(windows, options.threads, [&](std::size_t wi) {
          auto counts = Matrix<std::int64_t>::square(k, 0);
          for (const std::size_t i : bucket[wi]) ++counts(from[i], to[i]);
          const DemandMatrix demand(std::move(counts));
          if (!demand_graph_connected(demand)) return;
          const DegeneracyOptions dopt{DualRangeMethod::kShortestPath, demand_stations(demand)};
          verdict[wi] = dual_degeneracy_oracle(graph, net_flow(demand), dopt).degenerate ? 2 : 1;
        });
        cell.n_windows = windows;
        for (const int v : verdict) {
          cell.n_disconnected += v == 0 ? 1 : 0;
          cell.n_affected += v == 2 ? 1 : 0;
        }
      }
      const std::size_t connected = cell.n_windows - cell.n_disconnected;
      cell.p_affected = connected ? static_cast<double>(cell.n_affected) / static_cast<double>(connected) : 0.0;
      std::tie(cell.ci_low, cell.ci_high) = wilson_interval(cell.n_affected, connected);
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string survey_to_csv(const std::vector<SurveyCell>& cells) {
  std::ostringstream os;
  os << "stations,window_minutes,p_affected,ci_low,ci_high,n_windows,n_disconnected\n";
  for (const auto& c : cells) {
    os << c.stations << ',' << c.window_minutes << ',' << fmt(c.p_affected) << ',' << fmt(c.ci_low) << ','
       << fmt(c.ci_high) << ',' << c.n_windows << ',' << c.n_disconnected << '\n';
  }
  return os.str();
}

}  // namespace modfrag
