#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "modfrag/adversarial.hpp"
#include "modfrag/circulation.hpp"
#include "modfrag/errors.hpp"
#include "modfrag/io.hpp"
#include "modfrag/pof.hpp"
#include "modfrag/regime.hpp"
#include "modfrag/synthetic.hpp"
#include "modfrag/trips.hpp"

#ifndef MODFRAG_VERSION
#define MODFRAG_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace modfrag;
using io::Json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string out_dir = ".";
  std::size_t threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out-dir", c.out_dir, "Directory for every file this command writes")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads (output does not depend on it)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

struct ShareArgs {
  std::string file;
  double rho = 0.5;
  std::size_t firms = 0;
};

void add_shares(CLI::App* sub, ShareArgs& s) {
  sub->add_option("--shares", s.file, "Shares JSON (rho, firms, shares, rho_matrix or matrices)");
  sub->add_option("--rho", s.rho, "Homogeneous share of firm a when no shares file is given")->capture_default_str();
  sub->add_option("--firms", s.firms, "Equal shares among this many firms (overrides --rho)")->capture_default_str();
}

MarketShares resolve_shares(const ShareArgs& s, const std::string& instance_path) {
  if (!s.file.empty()) return io::shares_from_json(io::read_json_file(s.file));
  const Json inst = io::read_json_file(instance_path);
  if (inst.is_object() && inst.contains("shares")) return io::shares_from_json(inst.at("shares"));
  if (s.firms > 0) return MarketShares::equal(s.firms);
  return MarketShares::homogeneous(s.rho);
}

SplitFamily parse_family(const std::string& name) {
  if (name == "binomial") return SplitFamily::kBinomial;
  if (name == "poisson") return SplitFamily::kPoissonDemand;
  throw ValidationError("unknown split family: " + name);
}

struct Instance {
  std::string graph;
  std::string demand;
};

void add_instance(CLI::App* sub, Instance& inst) {
  sub->add_option("--graph", inst.graph, "Graph JSON, or a combined instance with graph and demand")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--demand", inst.demand, "Demand JSON (defaults to the graph file)")->check(CLI::ExistingFile);
}

StationGraph load_graph(const Instance& inst) { return io::graph_from_json(io::read_json_file(inst.graph)); }

DemandMatrix load_demand(const std::string& path, const StationGraph& graph) {
  DemandMatrix d = io::demand_from_json(io::read_json_file(path));
  if (d.size() != graph.size()) {
    throw ValidationError(path + ": demand has " + std::to_string(d.size()) + " stations, graph has " +
                          std::to_string(graph.size()));
  }
  return d;
}

std::string demand_path(const Instance& inst) { return inst.demand.empty() ? inst.graph : inst.demand; }

struct BoxArgs {
  BoundingBox box;
};

void add_box(CLI::App* sub, BoxArgs& b) {
  sub->add_option("--min-lon", b.box.min_lon)->capture_default_str();
  sub->add_option("--max-lon", b.box.max_lon)->capture_default_str();
  sub->add_option("--min-lat", b.box.min_lat)->capture_default_str();
  sub->add_option("--max-lat", b.box.max_lat)->capture_default_str();
}

class Output {
 public:
  Output(const CLI::App& root, const Common& common) : root_(root), dir_(common.out_dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { io::write_text_file(path(name), text); }

  void manifest() const {
    std::string text = "# modfrag " MODFRAG_VERSION "\n";
    text += "# replay: modfrag --config manifest.ini\n";
    for (const auto* sub : root_.get_subcommands()) {
      text += "[" + sub->get_name() + "]\n";
      text += sub->config_to_str(true, false);
    }
    write("manifest.ini", text);
  }

 private:
  const CLI::App& root_;
  fs::path dir_;
};

std::string file_stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Long-format rows (source, x_name, x, variable, value) from wide CSV files.
std::string longform_csv(const std::vector<std::string>& inputs) {
  std::ostringstream os;
  os << "source,x_name,x,variable,value\n";
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) continue;
    std::vector<std::string> header;
    {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2) throw ValidationError(path + ": need at least two columns");
    const std::string source = file_stem(path);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() != header.size()) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                              " fields");
      }
      for (std::size_t c = 1; c < cells.size(); ++c) {
        os << source << ',' << header[0] << ',' << cells[0] << ',' << header[c] << ',' << cells[c] << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rebalancing cost and price-of-fragmentation workbench"};
  app.set_version_flag("--version", MODFRAG_VERSION);
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "key=value file; keys are <subcommand>.<option>");
  app.require_subcommand(1, 1);

  // solve
  Common solve_c;
  Instance solve_i;
  auto* solve = app.add_subcommand("solve", "Min-cost rebalancing circulation")->configurable();
  add_instance(solve, solve_i);
  add_common(solve, solve_c);

  // classify
  Common cls_c;
  Instance cls_i;
  ShareArgs cls_s;
  std::string cls_method = "shortest-path";
  auto* classify = app.add_subcommand("classify", "Fragmentation regime with its certificate")->configurable();
  add_instance(classify, cls_i);
  add_shares(classify, cls_s);
  classify->add_option("--method", cls_method, "Dual range method")
      ->check(CLI::IsMember({"shortest-path", "simplex"}))
      ->capture_default_str();
  add_common(classify, cls_c);

  // sweep
  Common sw_c;
  std::string sw_graph;
  std::vector<std::string> sw_demands;
  ShareArgs sw_s;
  std::string sw_family = "binomial";
  std::vector<std::int64_t> sw_grid{100, 316, 1000, 3162, 10000};
  std::size_t sw_trials = 500;
  std::uint64_t sw_seed = 0;
  std::size_t sw_bootstrap = 200;
  auto* sweep = app.add_subcommand("sweep", "PoF scaling sweep over theta; one curve CSV per demand")->configurable();
  sweep->add_option("--graph", sw_graph, "Graph JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--demand", sw_demands, "Demand JSON files")->required()->check(CLI::ExistingFile);
  add_shares(sweep, sw_s);
  sweep->add_option("--family", sw_family)->check(CLI::IsMember({"binomial", "poisson"}))->capture_default_str();
  sweep->add_option("--theta", sw_grid, "Strictly increasing theta grid")->delimiter(',')->capture_default_str();
  sweep->add_option("--trials", sw_trials, "Trials per theta")->capture_default_str();
  sweep->add_option("--seed", sw_seed)->capture_default_str();
  sweep->add_option("--bootstrap", sw_bootstrap, "Bootstrap replicates for the slope CI")->capture_default_str();
  add_common(sweep, sw_c);

  // pof
  Common pof_c;
  Instance pof_i;
  ShareArgs pof_s;
  std::string pof_family = "binomial";
  std::int64_t pof_theta = 100;
  std::size_t pof_trials = 500;
  std::uint64_t pof_seed = 0;
  auto* pof = app.add_subcommand("pof", "PoF estimate at a single theta")->configurable();
  add_instance(pof, pof_i);
  add_shares(pof, pof_s);
  pof->add_option("--family", pof_family)->check(CLI::IsMember({"binomial", "poisson"}))->capture_default_str();
  pof->add_option("--theta", pof_theta)->capture_default_str();
  pof->add_option("--trials", pof_trials)->capture_default_str();
  pof->add_option("--seed", pof_seed)->capture_default_str();
  add_common(pof, pof_c);

  // adversarial
  Common adv_c;
  Instance adv_i;
  std::string adv_kappa;
  std::size_t adv_iters = 100;
  std::size_t adv_restarts = 8;
  std::uint64_t adv_seed = 0;
  std::string adv_certify = "auto";
  auto* adv = app.add_subcommand("adversarial", "Worst-case binary demand split")->configurable();
  add_instance(adv, adv_i);
  adv->add_option("--kappa", adv_kappa, "Initial split JSON (default: firm a takes everything)")
      ->check(CLI::ExistingFile);
  adv->add_option("--max-iters", adv_iters)->capture_default_str();
  adv->add_option("--restarts", adv_restarts)->capture_default_str();
  adv->add_option("--seed", adv_seed)->capture_default_str();
  adv->add_option("--certify", adv_certify, "Run the brute-force oracle: auto (if <= 20 edges), always, never")
      ->check(CLI::IsMember({"auto", "always", "never"}))
      ->capture_default_str();
  add_common(adv, adv_c);

  // ingest
  Common ing_c;
  BoxArgs ing_b;
  std::string ing_trips;
  std::size_t ing_k = 20;
  std::uint64_t ing_seed = 0;
  std::size_t ing_iters = 100;
  std::string ing_start;
  std::int64_t ing_minutes = 60;
  auto* ingest = app.add_subcommand("ingest", "Trips to stations, Manhattan graph and one demand window")
                     ->configurable();
  ingest->add_option("--trips", ing_trips, "Trip CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--stations", ing_k)->capture_default_str();
  ingest->add_option("--seed", ing_seed)->capture_default_str();
  ingest->add_option("--max-iters", ing_iters)->capture_default_str();
  ingest->add_option("--window-start", ing_start, "ISO-8601 start (default: first pickup rounded down)");
  ingest->add_option("--window-minutes", ing_minutes)->capture_default_str()->check(CLI::PositiveNumber);
  add_box(ingest, ing_b);
  add_common(ingest, ing_c);

  // survey
  Common sv_c;
  BoxArgs sv_b;
  std::string sv_trips;
  std::vector<std::size_t> sv_k{10, 20, 40};
  std::vector<std::int64_t> sv_w{15, 30, 60};
  std::uint64_t sv_seed = 0;
  std::size_t sv_iters = 100;
  auto* survey = app.add_subcommand("survey", "Share of dual-degenerate windows per (K, window)")->configurable();
  survey->add_option("--trips", sv_trips, "Trip CSV")->required()->check(CLI::ExistingFile);
  survey->add_option("--stations", sv_k)->delimiter(',')->capture_default_str();
  survey->add_option("--windows", sv_w, "Window lengths in minutes")->delimiter(',')->capture_default_str();
  survey->add_option("--seed", sv_seed)->capture_default_str();
  survey->add_option("--max-iters", sv_iters)->capture_default_str();
  add_box(survey, sv_b);
  add_common(survey, sv_c);

  // gen-corpus
  Common gen_c;
  std::string gen_kind = "two-cluster";
  TwoClusterSpec gen_two;
  PlantedSpec gen_planted;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-corpus", "Synthetic trip corpus")->configurable();
  gen->add_option("--kind", gen_kind)->check(CLI::IsMember({"two-cluster", "planted"}))->capture_default_str();
  gen->add_option("--rows", gen_two.trips, "Exact row count (two-cluster)")->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--internal-per-slot", gen_two.internal_per_slot)->capture_default_str();
  gen->add_option("--extra-pairs-per-slot", gen_two.extra_pairs_per_slot)->capture_default_str();
  gen->add_option("--hotspots", gen_planted.hotspots, "Hotspots (planted)")->capture_default_str();
  gen->add_option("--hours", gen_planted.hours, "Hours (planted)")->capture_default_str();
  gen->add_option("--max-rate", gen_planted.max_rate, "Max hourly O-D rate (planted)")->capture_default_str();
  add_common(gen, gen_c);

  // longform
  Common lf_c;
  std::vector<std::string> lf_inputs;
  auto* longform = app.add_subcommand("longform", "Wide CSVs to long format for plotting")->configurable();
  longform->add_option("--input", lf_inputs, "CSV files")->required()->check(CLI::ExistingFile);
  add_common(longform, lf_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (solve->parsed()) {
      const Output out(app, solve_c);
      const auto g = load_graph(solve_i);
      const auto d = load_demand(demand_path(solve_i), g);
      const auto sol = min_cost_rebalance(g, net_flow(d));
      out.write("solution.json", io::dump(io::solution_to_json(sol)));
      out.manifest();
      std::cout << "cost " << fmt17(sol.cost) << "\n";
    } else if (classify->parsed()) {
      const Output out(app, cls_c);
      const auto g = load_graph(cls_i);
      const auto d = load_demand(demand_path(cls_i), g);
      const auto shares = resolve_shares(cls_s, demand_path(cls_i));
      const auto method = cls_method == "simplex" ? DualRangeMethod::kSimplex : DualRangeMethod::kShortestPath;
      const auto label = classify_regime(g, d, shares, method);
      out.write("regime.json", io::dump(io::label_to_json(label)));
      out.manifest();
      std::cout << to_string(label.kind) << "\n";
    } else if (sweep->parsed()) {
      if (sw_trials < 1) throw ValidationError("trials must be >= 1");
      const Output out(app, sw_c);
      const auto g = io::graph_from_json(io::read_json_file(sw_graph));
      const SplitSpec spec{parse_family(sw_family), resolve_shares(sw_s, sw_demands.front())};
      Json summary = Json::array();
      std::map<std::string, int> used;
      for (const auto& path : sw_demands) {
        const auto d = load_demand(path, g);
        std::string name = file_stem(path);
        if (used[name]++ > 0) name += "_" + std::to_string(used[name]);
        auto curve = scaling_sweep(g, d, spec, sw_grid, {sw_trials, sw_seed, sw_c.threads});
        curve.fit = fit_loglog_slope(curve.points, {sw_bootstrap, sw_seed});
        curve.regime_hint = regime_hint(curve.fit);
        const std::string csv = "curve_" + name + ".csv";
        out.write(csv, curve_to_csv(curve));
        summary.push_back({{"demand", path}, {"csv", csv}, {"fit", io::fit_to_json(curve.fit)},
                           {"regime_hint", curve.regime_hint}});
        std::cout << name << " " << curve.regime_hint;
        if (curve.fit.status == SlopeStatus::kFitted) std::cout << " slope " << fmt17(curve.fit.slope);
        std::cout << "\n";
      }
      out.write("sweep.json", io::dump(summary));
      out.manifest();
    } else if (pof->parsed()) {
      if (pof_trials < 1) throw ValidationError("trials must be >= 1");
      const Output out(app, pof_c);
      const auto g = load_graph(pof_i);
      const auto d = load_demand(demand_path(pof_i), g);
      const SplitSpec spec{parse_family(pof_family), resolve_shares(pof_s, demand_path(pof_i))};
      const auto est = estimate_pof(g, d, spec, pof_theta, {pof_trials, theta_seed(pof_seed, pof_theta), pof_c.threads});
      Json j = io::estimate_to_json(est);
      // The two-station closed form applies with tau_12 = 1 and two scalar firms.
      if (g.size() == 2 && g.tau(0, 1) == 1.0 && g.tau(1, 0) >= 1.0 && spec.shares.is_scalar() &&
          spec.shares.firms() == 2 && d.count(0, 1) > 0 && d.count(1, 0) > 0) {
        const double rho = spec.shares.scalar_shares()[0];
        if (rho > 0.0 && rho < 1.0) {
          const auto p = two_node_closed_form(double(d.count(0, 1)), double(d.count(1, 0)), g.tau(1, 0), rho,
                                              double(pof_theta));
          j["closed_form"] = p.balanced ? Json{{"gamma", p.gamma}}
                                        : Json{{"decay_rate", p.decay_rate}, {"envelope", p.envelope}};
        }
      }
      out.write("pof.json", io::dump(j));
      out.manifest();
      std::cout << "gamma " << fmt17(est.gamma_mean) << " stderr " << fmt17(est.gamma_stderr) << "\n";
    } else if (adv->parsed()) {
      const Output out(app, adv_c);
      const auto g = load_graph(adv_i);
      const auto d = load_demand(demand_path(adv_i), g);
      const auto init = adv_kappa.empty() ? full_split(d) : io::kappa_from_json(io::read_json_file(adv_kappa));
      const auto res = adversarial_subgradient(g, d, init, {adv_iters, adv_restarts, adv_seed, adv_c.threads});
      Json j = io::adversarial_to_json(res);
      const std::size_t edges = d.positive_edges();
      const bool run_bf = adv_certify == "always" || (adv_certify == "auto" && edges <= kMaxBruteForceEdges);
      j["certified"] = false;
      if (run_bf) {
        const auto bf = adversarial_bruteforce(g, d, adv_c.threads);
        const double gap = bf.value - res.value;
        j["bruteforce"] = io::bruteforce_to_json(bf);
        j["gap"] = gap;
        j["certified"] = gap <= 1e-9 * std::max(1.0, bf.value);
      }
      out.write("adversarial.json", io::dump(j));
      out.manifest();
      std::cout << "f " << fmt17(res.value) << (j["certified"].get<bool>() ? " certified" : "") << "\n";
    } else if (ingest->parsed()) {
      const Output out(app, ing_c);
      const auto load = load_trips(ing_trips, ing_b.box);
      const Projection proj(ing_b.box.center());
      const auto clustering = cluster_stations(load.trips, ing_k, {ing_seed, ing_iters, ing_c.threads, proj});
      const auto g = manhattan_costs(clustering);
      const std::int64_t w = ing_minutes * 60;
      std::int64_t start = 0;
      if (!ing_start.empty()) {
        const auto t = parse_iso8601(ing_start);
        if (!t) throw ValidationError("bad --window-start: " + ing_start);
        start = *t;
      } else if (!load.trips.empty()) {
        std::int64_t first = load.trips.front().pickup_time;
        for (const auto& t : load.trips) first = std::min(first, t.pickup_time);
        start = first - ((first % w) + w) % w;
      }
      const auto d = build_demand(load.trips, clustering, {start, w});
      out.write("stations.json", io::dump(io::clustering_to_json(clustering)));
      out.write("graph.json", io::dump(io::graph_to_json(g)));
      out.write("demand.json", io::dump(io::demand_to_json(d)));
      out.write("ingest.json", io::dump({{"load", io::load_report_to_json(load.report)},
                                         {"window_start", format_iso8601(start)},
                                         {"window_minutes", ing_minutes},
                                         {"trips_in_window", d.total()},
                                         {"dropped_diagonal", d.dropped_diagonal()}}));
      out.manifest();
      std::cout << "parsed " << load.report.parsed << " of " << load.report.rows << " rows\n";
    } else if (survey->parsed()) {
      const Output out(app, sv_c);
      const auto load = load_trips(sv_trips, sv_b.box);
      const auto cells =
          degeneracy_survey(load.trips, sv_k, sv_w, {sv_seed, sv_iters, sv_c.threads, Projection(sv_b.box.center())});
      out.write("survey.csv", survey_to_csv(cells));
      out.write("survey.json", io::dump({{"load", io::load_report_to_json(load.report)}}));
      out.manifest();
      std::cout << "cells " << cells.size() << "\n";
    } else if (gen->parsed()) {
      const Output out(app, gen_c);
      std::ostringstream csv;
      if (gen_kind == "two-cluster") {
        gen_two.seed = gen_seed;
        write_trips_csv(csv, generate_two_cluster(gen_two));
      } else {
        gen_planted.seed = gen_seed;
        const auto corpus = generate_planted(gen_planted);
        write_trips_csv(csv, corpus.trips);
        Json hs = Json::array();
        for (const auto& h : corpus.hotspots) hs.push_back({{"lon", h.lon}, {"lat", h.lat}});
        Json rates = Json::array();
        for (std::size_t i = 0; i < corpus.rates.rows(); ++i) {
          Json row = Json::array();
          for (std::size_t j = 0; j < corpus.rates.cols(); ++j) row.push_back(corpus.rates(i, j));
          rates.push_back(std::move(row));
        }
        out.write("planted.json", io::dump({{"start", format_iso8601(corpus.start_time)},
                                            {"hotspots", hs},
                                            {"hourly_rates", rates}}));
      }
      out.write("trips.csv", csv.str());
      out.manifest();
    } else if (longform->parsed()) {
      const Output out(app, lf_c);
      out.write("longform.csv", longform_csv(lf_inputs));
      out.manifest();
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
