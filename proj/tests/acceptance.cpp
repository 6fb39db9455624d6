// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//   acceptance [out_dir]
// CSV artifacts for the determinism check are written to out_dir.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "modfrag/adversarial.hpp"
#include "modfrag/circulation.hpp"
#include "modfrag/io.hpp"
#include "modfrag/pof.hpp"
#include "modfrag/regime.hpp"
#include "modfrag/splitting.hpp"
#include "modfrag/synthetic.hpp"
#include "modfrag/trips.hpp"

using namespace modfrag;
namespace fs = std::filesystem;

namespace {

#ifndef MODFRAG_DATA_DIR
#define MODFRAG_DATA_DIR "data"
#endif

constexpr std::uint64_t kSeed = 7;
constexpr std::uint64_t kCorpusSeed = 1;
constexpr std::size_t kCorpusRows = 20000;

const std::vector<std::int64_t> kThetaGrid{100, 316, 1000, 3162, 10000};
const std::vector<std::size_t> kStationCounts{10, 20, 40};
const std::vector<std::int64_t> kWindows{15, 30, 60};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double ms) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << " ("
            << fmt("%.1f", ms) << " ms)" << std::endl;
  if (!o.pass) ++failures;
}

void run(int id, const std::string& name, const std::function<Outcome()>& fn) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, name, o, ms_since(t0));
}

bool acyclic(const std::vector<SupportEdge>& support, std::size_t n) {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : support) {
    const auto a = find(e.from);
    const auto b = find(e.to);
    if (a == b) return false;
    parent[a] = b;
  }
  return true;
}

NetFlowVector scaled(const NetFlowVector& b, double s) {
  std::vector<double> v = b.values();
  for (auto& x : v) x *= s;
  return NetFlowVector(v);
}

NetFlowVector midpoint(const NetFlowVector& a, const NetFlowVector& b) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (a[i] + b[i]);
  return NetFlowVector(v);
}

SplitSpec binomial(MarketShares shares) { return {SplitFamily::kBinomial, std::move(shares)}; }

PofEstimate prop2_estimate(std::size_t threads) {
  return estimate_pof(fixtures::two_node_graph(1.0), fixtures::two_node_demand(8, 8),
                      binomial(MarketShares::homogeneous(0.5)), 100, {10000, kSeed, threads});
}

std::string prop2_csv(std::size_t threads) {
  PofCurve curve;
  curve.points.push_back(prop2_estimate(threads));
  return curve_to_csv(curve);
}

struct SweepPair {
  PofCurve l1;
  PofCurve l2;
};

SweepPair sweeps(const MarketShares& shares, std::size_t threads) {
  const auto g = fixtures::four_node_graph();
  const PofOptions opt{500, kSeed, threads};
  return {scaling_sweep(g, fixtures::lambda1(), binomial(shares), kThetaGrid, opt),
          scaling_sweep(g, fixtures::lambda2(), binomial(shares), kThetaGrid, opt)};
}

Outcome check_sweeps(const SweepPair& s) {
  const double l1 = s.l1.points.back().gamma_over_theta();
  const double l2 = s.l2.points.back().gamma_over_theta();
  const bool slope_ok = s.l2.fit.status == SlopeStatus::kFitted && s.l2.fit.slope >= -0.6 && s.l2.fit.slope <= -0.4;
  const bool ratio_ok = l1 * 10.0 <= l2 && l2 > 0.0;
  const bool hint_ok = s.l1.regime_hint == "decay-faster-than-threshold";
  std::ostringstream os;
  os << "L2 slope " << fmt("%.4f", s.l2.fit.slope) << " CI [" << fmt("%.3f", s.l2.fit.ci_low) << ", "
     << fmt("%.3f", s.l2.fit.ci_high) << "] hint " << s.l2.regime_hint << "; gamma/theta at 1e4: L1 "
     << fmt("%.3g", l1) << " vs L2 " << fmt("%.3g", l2) << "; L1 hint " << s.l1.regime_hint;
  return {slope_ok && ratio_ok && hint_ok, os.str()};
}

std::vector<TripRecord> load_corpus() {
  const auto load = load_trips(std::string(MODFRAG_DATA_DIR) + "/corpus/two_cluster.csv", BoundingBox{});
  return load.trips;
}

std::vector<SurveyCell> survey(const std::vector<TripRecord>& trips, std::size_t threads) {
  SurveyOptions opt;
  opt.seed = kSeed;
  opt.threads = threads;
  return degeneracy_survey(trips, kStationCounts, kWindows, opt);
}

struct Instance {
  std::string name;
  StationGraph graph;
  DemandMatrix demand;
};

std::vector<Instance> bundled_instances() {
  const fs::path dir = fs::path(MODFRAG_DATA_DIR) / "fixtures";
  const StationGraph four = io::graph_from_json(io::read_json_file((dir / "four_node_graph.json").string()));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Instance> out;
  for (const auto& path : files) {
    io::Json j;
    try {
      j = io::read_json_file(path.string());
    } catch (const std::exception&) {
      continue;  // malformed.json is bundled on purpose
    }
    if (!j.is_object()) continue;
    const bool nested = j.contains("demand");
    if (!nested && !j.contains("counts")) continue;
    DemandMatrix d = io::demand_from_json(j);
    StationGraph g = j.contains("graph") ? io::graph_from_json(j) : four;
    if (g.size() != d.size()) continue;
    out.push_back({path.filename().string(), std::move(g), std::move(d)});
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out_dir = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(out_dir);
  const std::size_t threads = std::max(4u, std::thread::hardware_concurrency());

  std::string csv4;
  std::string csv5;
  std::string csv8;

  run(1, "golden rebalancing costs", [] {
    struct Case {
      std::string name;
      StationGraph g;
      NetFlowVector b;
      double expect;
    };
    std::vector<Case> cases{
        {"two-node", fixtures::two_node_graph(2.0), net_flow(fixtures::two_node_demand(3, 5)), two_node_rc(3, 5, 2)},
        {"L1", fixtures::four_node_graph(), net_flow(fixtures::lambda1()), 10.0},
        {"L2", fixtures::four_node_graph(), net_flow(fixtures::lambda2()), 12.0},
    };
    bool ok = std::abs(two_node_rc(3, 5, 2) - 4.0) < 1e-12;
    std::ostringstream os;
    for (const auto& c : cases) {
      const auto t0 = Clock::now();
      const double rc = rebalancing_cost(c.g, c.b);
      const double ms = ms_since(t0);
      const double oracle = brute_force_rc(c.g, c.b);
      const bool good = std::abs(rc - c.expect) <= 1e-9 && std::abs(oracle - c.expect) <= 1e-9 && ms < 1.0;
      ok = ok && good;
      os << c.name << " RC " << fmt("%.10g", rc) << " (expect " << fmt("%g", c.expect) << ", oracle "
         << fmt("%.10g", oracle) << ", " << fmt("%.3f", ms) << " ms)";
      if (&c != &cases.back()) os << "; ";
    }
    return Outcome{ok, os.str()};
  });

  run(2, "duality and structure suite, 200 instances", [] {
    std::mt19937_64 rng(20241014);
    std::size_t bad = 0;
    std::size_t brute = 0;
    double worst_gap = 0.0;
    std::string first;
    for (std::size_t t = 0; t < 200; ++t) {
      const std::size_t n = 2 + t % 5;
      const StationGraph g = t % 2 ? fixtures::random_metric(rng, n) : fixtures::random_planar(rng, n);
      const NetFlowVector b = net_flow(fixtures::random_demand(rng, n, 6, 0.6));
      const NetFlowVector b2 = net_flow(fixtures::random_demand(rng, n, 6, 0.6));
      const auto s = min_cost_rebalance(g, b);
      const double tol = 1e-9 * std::max(1.0, g.max_cost());
      std::vector<std::string> why;

      const double gap = std::abs(dual_objective(s.duals, b) - s.cost);
      worst_gap = std::max(worst_gap, gap);
      if (gap > 1e-6) why.push_back("duality gap");
      double primal = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double net = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (s.flows(i, j) < 0.0) why.push_back("negative flow");
          net += s.flows(i, j) - s.flows(j, i);
          primal += g.tau(i, j) * s.flows(i, j);
          const double reduced = g.tau(i, j) - (s.duals[i] - s.duals[j]);
          if (reduced < -tol) why.push_back("dual infeasible");
          if (s.flows(i, j) > flow_tolerance(b) && std::abs(reduced) > tol) why.push_back("slackness");
        }
        if (std::abs(net - b[i]) > flow_tolerance(b)) why.push_back("conservation");
      }
      if (std::abs(primal - s.cost) > 1e-9 * std::max(1.0, s.cost)) why.push_back("cost mismatch");
      if (!acyclic(s.support, n)) why.push_back("cyclic support");

      const double theta = std::array<double, 3>{2.0, 3.0, 10.0}[t % 3];
      const double rc_scaled = rebalancing_cost(g, scaled(b, theta));
      if (std::abs(rc_scaled - theta * s.cost) > 1e-9 * std::max(1.0, theta * s.cost)) why.push_back("homogeneity");
      const double rc2 = rebalancing_cost(g, b2);
      const double mid = rebalancing_cost(g, midpoint(b, b2));
      if (mid > 0.5 * (s.cost + rc2) + 1e-9 * std::max(1.0, s.cost + rc2)) why.push_back("convexity");

      if (n <= 5) {
        ++brute;
        if (std::abs(brute_force_rc(g, b) - s.cost) > 1e-9 * std::max(1.0, s.cost)) why.push_back("brute force");
      }
      if (!why.empty()) {
        ++bad;
        if (first.empty()) first = "instance " + std::to_string(t) + ": " + why.front();
      }
    }
    std::ostringstream os;
    os << bad << " failing of 200, " << brute << " brute-force matched, worst gap " << fmt("%.2e", worst_gap);
    if (!first.empty()) os << ", first " << first;
    return Outcome{bad == 0, os.str()};
  });

  run(3, "regime trichotomy and degeneracy agreement", [] {
    const auto g = fixtures::four_node_graph();
    const auto half = MarketShares::homogeneous(0.5);
    const auto l1 = classify_regime(g, fixtures::lambda1(), half, DualRangeMethod::kSimplex);
    const auto l2 = classify_regime(g, fixtures::lambda2(), half, DualRangeMethod::kSimplex);
    const auto lh = classify_regime(fixtures::two_node_graph(2.0), fixtures::two_node_demand(10, 10),
                                    fixtures::heterogeneous_shares(), DualRangeMethod::kSimplex);
    const double big_l = lh.heterogeneity_gap.value_or(-1.0);
    bool ok = l1.kind == RegimeKind::kResilient && l2.kind == RegimeKind::kAffected &&
              l2.certificate.support.components.size() == 2 &&
              std::abs(l2.certificate.max_range_width - 1.0) <= 1e-9 && lh.kind == RegimeKind::kLinearDivergent &&
              std::abs(big_l - 18.0) <= 1e-6;

    std::mt19937_64 rng(99);
    std::size_t disagree = 0;
    std::size_t degenerate = 0;
    for (std::size_t t = 0; t < 100; ++t) {
      const std::size_t n = 3 + t % 4;
      auto tau = fixtures::random_metric(rng, n).costs();
      std::uniform_real_distribution<double> f(1.0 - 1e-3, 1.0 + 1e-3);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) tau(i, j) *= f(rng);
        }
      }
      const StationGraph pg(tau);
      const auto d = fixtures::random_demand(rng, n, 20, 0.5);
      const auto b = net_flow(d);
      const auto lp = dual_degeneracy_oracle(pg, b, {DualRangeMethod::kSimplex, demand_stations(d)});
      const auto sp = dual_degeneracy_oracle(pg, b, {DualRangeMethod::kShortestPath, demand_stations(d)});
      const bool combinatorial = support_component_count(lp.solution, lp.mask) > 1;
      if (combinatorial != lp.degenerate || sp.degenerate != lp.degenerate) ++disagree;
      degenerate += lp.degenerate ? 1 : 0;
    }
    ok = ok && disagree == 0;
    std::ostringstream os;
    os << "L1 " << to_string(l1.kind) << ", L2 " << to_string(l2.kind) << " ("
       << l2.certificate.support.components.size() << " components, width "
       << fmt("%.10g", l2.certificate.max_range_width) << "), heterogeneous " << to_string(lh.kind) << " L "
       << fmt("%.10g", big_l) << "; perturbed: " << disagree << " disagreements, " << degenerate
       << "/100 degenerate";
    return Outcome{ok, os.str()};
  });

  run(4, "balanced two-node Monte Carlo, 1e4 trials", [&] {
    const auto t0 = Clock::now();
    const auto est = prop2_estimate(threads);
    const double ms = ms_since(t0);
    const double expect = two_node_closed_form(8, 8, 1, 0.5, 100).gamma;
    const double rel = std::abs(est.gamma_mean - expect) / expect;
    PofCurve curve;
    curve.points.push_back(est);
    csv4 = curve_to_csv(curve);
    write_file(out_dir / "criterion4.csv", csv4);
    std::ostringstream os;
    os << "gamma " << fmt("%.4f", est.gamma_mean) << " +- " << fmt("%.4f", est.gamma_stderr) << " vs "
       << fmt("%.4f", expect) << ", rel err " << fmt("%.2f", 100 * rel) << "%";
    return Outcome{rel <= 0.05 && ms < 30000.0, os.str()};
  });

  run(5, "scaling sweeps L2 vs L1, 500 trials per theta", [&] {
    const auto t0 = Clock::now();
    const auto s = sweeps(MarketShares::homogeneous(0.5), threads);
    const double ms = ms_since(t0);
    csv5 = curve_to_csv(s.l1) + curve_to_csv(s.l2);
    write_file(out_dir / "criterion5.csv", csv5);
    Outcome o = check_sweeps(s);
    o.pass = o.pass && ms < 300000.0;
    return o;
  });

  run(6, "heterogeneous linear regime and three equal firms", [&] {
    const auto est = estimate_pof(fixtures::two_node_graph(2.0), fixtures::two_node_demand(10, 10),
                                  binomial(fixtures::heterogeneous_shares()), 10000, {500, kSeed, threads});
    const double rel = std::abs(est.gamma_over_theta() - 18.0) / 18.0;
    const auto three = MarketShares::equal(3);
    const auto g = fixtures::four_node_graph();
    const auto c1 = classify_regime(g, fixtures::lambda1(), three);
    const auto c2 = classify_regime(g, fixtures::lambda2(), three);
    const Outcome s = check_sweeps(sweeps(three, threads));
    const bool labels = c1.kind == RegimeKind::kResilient && c2.kind == RegimeKind::kAffected;
    std::ostringstream os;
    os << "heterogeneous gamma/theta " << fmt("%.4f", est.gamma_over_theta()) << " vs 18 (rel err "
       << fmt("%.2f", 100 * rel) << "%); 3 firms: labels " << to_string(c1.kind) << "/" << to_string(c2.kind)
       << ", " << s.detail;
    return Outcome{rel <= 0.05 && labels && s.pass, os.str()};
  });

  run(7, "adversarial split: brute force and subgradient", [&] {
    const auto bf = adversarial_bruteforce(fixtures::two_node_graph(2.0), fixtures::two_node_demand(1, 1), threads);
    bool ok = std::abs(bf.value - 3.0) <= 1e-9;
    std::ostringstream os;
    os << "two-node f* " << fmt("%.10g", bf.value) << "; ";
    std::size_t checked = 0;
    for (const auto& inst : bundled_instances()) {
      if (inst.demand.positive_edges() > 12) continue;
      ++checked;
      const auto exact = adversarial_bruteforce(inst.graph, inst.demand, threads);
      const auto heur = adversarial_subgradient(inst.graph, inst.demand, full_split(inst.demand),
                                                {100, 8, kSeed, threads});
      const bool match = std::abs(heur.value - exact.value) <= 1e-9 * std::max(1.0, exact.value);
      ok = ok && match;
      os << inst.name << " " << fmt("%g", heur.value) << (match ? "=" : "!=") << fmt("%g", exact.value) << "; ";
    }
    ok = ok && checked > 0;

    // f >= 0 and f(k) = f(1 - k) on random corners.
    std::mt19937_64 rng(5);
    std::size_t violations = 0;
    for (std::size_t t = 0; t < 100; ++t) {
      const std::size_t n = 2 + t % 5;
      const auto g = fixtures::random_planar(rng, n);
      const auto d = fixtures::random_demand(rng, n, 6, 0.6);
      SplitIndicator k = SplitIndicator::square(n, 0);
      SplitIndicator flip = SplitIndicator::square(n, 0);
      std::bernoulli_distribution coin(0.5);
      for (const auto& e : demand_edges(d)) {
        k(e.from, e.to) = coin(rng) ? 1 : 0;
        flip(e.from, e.to) = 1 - k(e.from, e.to);
      }
      const double f = pof_of_split(g, d, k);
      const double f_flip = pof_of_split(g, d, flip);
      const double tol = 1e-9 * std::max(1.0, std::abs(f));
      if (f < -tol || std::abs(f - f_flip) > tol) ++violations;
    }
    ok = ok && violations == 0;
    os << checked << " bundled instances; property violations " << violations << "/100";
    return Outcome{ok, os.str()};
  });

  run(8, "two-cluster corpus degeneracy survey", [&] {
    const auto t0 = Clock::now();
    const auto trips = load_corpus();
    TwoClusterSpec spec;
    spec.trips = kCorpusRows;
    spec.seed = kCorpusSeed;
    std::ostringstream regen;
    write_trips_csv(regen, generate_two_cluster(spec));
    std::ifstream bundled(std::string(MODFRAG_DATA_DIR) + "/corpus/two_cluster.csv", std::ios::binary);
    const std::string bundled_text((std::istreambuf_iterator<char>(bundled)), std::istreambuf_iterator<char>());
    const bool same_corpus = bundled_text == regen.str();

    const auto cells = survey(trips, threads);
    const double ms = ms_since(t0);
    csv8 = survey_to_csv(cells);
    write_file(out_dir / "criterion8.csv", csv8);
    bool ok = same_corpus && trips.size() == kCorpusRows && cells.size() == kStationCounts.size() * kWindows.size();
    double worst = 1.0;
    std::map<std::int64_t, double> last;
    bool monotone = true;
    for (const auto& c : cells) {
      if (c.n_windows == 0) ok = false;
      worst = std::min(worst, c.p_affected);
      auto it = last.find(c.window_minutes);
      if (it != last.end() && c.p_affected < it->second) monotone = false;
      last[c.window_minutes] = c.p_affected;
    }
    ok = ok && worst >= 0.9 && monotone && ms < 120000.0;
    std::ostringstream os;
    os << trips.size() << " trips (regenerated bytes " << (same_corpus ? "match" : "differ") << "), "
       << cells.size() << " cells, min affected " << fmt("%.3f", worst) << ", non-decreasing in K "
       << (monotone ? "yes" : "no");
    return Outcome{ok, os.str()};
  });

  run(9, "determinism across thread counts", [&] {
    std::ostringstream os;
    bool ok = !csv4.empty() && !csv5.empty() && !csv8.empty();
    const auto trips = load_corpus();
    for (std::size_t t : {std::size_t{1}, std::size_t{2}, threads + 3}) {
      const std::string a = prop2_csv(t);
      const auto s = sweeps(MarketShares::homogeneous(0.5), t);
      const std::string b = curve_to_csv(s.l1) + curve_to_csv(s.l2);
      const std::string c = survey_to_csv(survey(trips, t));
      const bool same = a == csv4 && b == csv5 && c == csv8;
      ok = ok && same;
      os << "threads " << t << " vs " << threads << ": " << (same ? "identical" : "DIFFER") << "; ";
    }
    os << "artifacts in " << out_dir.string();
    return Outcome{ok, os.str()};
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
