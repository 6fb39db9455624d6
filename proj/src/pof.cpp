#include "modfrag/pof.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "modfrag/circulation.hpp"
#include "modfrag/errors.hpp"
#include "modfrag/parallel.hpp"
#include "modfrag/rng.hpp"

namespace modfrag {
namespace {

struct TrialResult {
  double loss = 0.0;
  double base_rc = 0.0;
  std::vector<double> firm_rc;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

PofEstimate estimate_pof(const StationGraph& graph, const DemandMatrix& demand, const SplitSpec& spec,
                         std::int64_t theta, const PofOptions& options) {
  if (options.trials < 1) throw ValidationError("trials must be >= 1");
  if (theta < 1) throw ValidationError("theta must be >= 1");
  if (demand.size() != graph.size()) throw ValidationError("demand size does not match station count");
  spec.shares.check_size(demand.size());

  const std::size_t nf = spec.shares.firms();
  const DemandMatrix scaled = scale_demand(demand, theta);
  const double fixed_base =
      spec.family == SplitFamily::kBinomial ? rebalancing_cost(graph, net_flow(scaled)) : 0.0;

  std::vector<TrialResult> results(options.trials);
  parallel_for(options.trials, options.threads, [&](std::size_t t) {
    try {
      const SplitSample sample = sample_split(demand, spec, theta, options.seed, t);
      TrialResult r;
      r.firm_rc.resize(nf);
      double firms = 0.0;
      for (std::size_t k = 0; k < nf; ++k) {
        r.firm_rc[k] = rebalancing_cost(graph, net_flow(sample.firms[k]));
        firms += r.firm_rc[k];
      }
      if (spec.family == SplitFamily::kBinomial) {
        r.base_rc = fixed_base;
      } else {
        Matrix<std::int64_t> aggregate = Matrix<std::int64_t>::square(demand.size(), 0);
        for (const auto& f : sample.firms) {
          for (std::size_t e = 0; e < aggregate.values().size(); ++e) aggregate.values()[e] += f.counts().values()[e];
        }
        r.base_rc = rebalancing_cost(graph, net_flow(DemandMatrix(std::move(aggregate))));
      }
      r.loss = firms - r.base_rc;
      results[t] = std::move(r);
    } catch (const std::exception& e) {
      throw std::runtime_error("trial " + std::to_string(t) + " failed: " + e.what());
    }
  });

  // Indexed reduction in trial order.
  PofEstimate est;
  est.theta = theta;
  est.trials = options.trials;
  est.firm_mean_rc.assign(nf, 0.0);
  est.samples.reserve(options.trials);
  double sum = 0.0;
  double base_sum = 0.0;
  for (const auto& r : results) {
    sum += r.loss;
    base_sum += r.base_rc;
    for (std::size_t k = 0; k < nf; ++k) est.firm_mean_rc[k] += r.firm_rc[k];
    est.samples.push_back(r.loss);
  }
  const double n = static_cast<double>(options.trials);
  est.gamma_mean = sum / n;
  est.monopolist_rc = base_sum / n;
  for (auto& v : est.firm_mean_rc) v /= n;
  if (options.trials > 1) {
    double ss = 0.0;
    for (double s : est.samples) ss += (s - est.gamma_mean) * (s - est.gamma_mean);
    est.gamma_stderr = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return est;
}

SlopeFit fit_loglog_slope(const std::vector<PofEstimate>& points, const SlopeOptions& options) {
  std::vector<const PofEstimate*> usable;
  for (const auto& p : points) {
    if (p.gamma_mean > 0.0 && p.gamma_mean > 3.0 * p.gamma_stderr) usable.push_back(&p);
  }
  SlopeFit fit;
  fit.points_used = usable.size();
  if (usable.size() < 3) return fit;

  std::vector<double> x;
  std::vector<double> y;
  for (const auto* p : usable) {
    x.push_back(std::log(static_cast<double>(p->theta)));
    y.push_back(std::log(p->gamma_over_theta()));
  }
  const LineFit line = least_squares(x, y);
  fit.status = SlopeStatus::kFitted;
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.ci_low = fit.ci_high = line.slope;

  const bool have_samples =
      std::all_of(usable.begin(), usable.end(), [](const PofEstimate* p) { return !p->samples.empty(); });
  if (!have_samples || options.bootstrap == 0) return fit;

  std::vector<double> slopes;
  slopes.reserve(options.bootstrap);
  for (std::size_t rep = 0; rep < options.bootstrap; ++rep) {
    std::vector<double> yb;
    bool ok = true;
    for (std::size_t p = 0; p < usable.size() && ok; ++p) {
      const auto& s = usable[p]->samples;
      SplitMix64 rng(stream_key(options.seed, rep, p));
      double sum = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) sum += s[rng.below(s.size())];
      const double mean = sum / static_cast<double>(s.size());
      if (mean <= 0.0) ok = false;
      yb.push_back(std::log(mean / static_cast<double>(usable[p]->theta)));
    }
    if (ok) slopes.push_back(least_squares(x, yb).slope);
  }
  if (slopes.empty()) return fit;
  std::sort(slopes.begin(), slopes.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(slopes.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, slopes.size() - 1);
    return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
  };
  fit.ci_low = quantile(0.025);
  fit.ci_high = quantile(0.975);
  return fit;
}

std::string regime_hint(const SlopeFit& fit) {
  if (fit.status == SlopeStatus::kIndeterminate) return "decay-faster-than-threshold";
  if (fit.slope >= -0.25) return "linear-divergence";
  if (fit.slope >= -0.75) return "sqrt-growth";
  return "other-decay";
}

std::uint64_t theta_seed(std::uint64_t master, std::int64_t theta) {
  return mix64(master ^ mix64(static_cast<std::uint64_t>(theta) * 0x9E3779B97F4A7C15ULL));
}

PofCurve scaling_sweep(const StationGraph& graph, const DemandMatrix& demand, const SplitSpec& spec,
                       const std::vector<std::int64_t>& theta_grid, const PofOptions& options) {
  if (theta_grid.empty()) throw ValidationError("theta grid is empty");
  for (std::size_t i = 1; i < theta_grid.size(); ++i) {
    if (theta_grid[i] <= theta_grid[i - 1]) throw ValidationError("theta grid must be strictly increasing");
  }
  PofCurve curve;
  for (const std::int64_t theta : theta_grid) {
    PofOptions per = options;
    per.seed = theta_seed(options.seed, theta);
    curve.points.push_back(estimate_pof(graph, demand, spec, theta, per));
  }
  curve.fit = fit_loglog_slope(curve.points, {200, options.seed});
  curve.regime_hint = regime_hint(curve.fit);
  return curve;
}

double two_node_rc(double lambda, double mu, double tau) {
  return std::max(tau * (mu - lambda), lambda - mu);
}

TwoNodePrediction two_node_closed_form(double lambda, double mu, double tau, double rho, double theta) {
  if (!(tau >= 1.0)) throw ValidationError("two-node closed form needs tau >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("two-node closed form needs rho in (0, 1)");
  if (!(lambda > 0.0 && mu > 0.0)) throw ValidationError("two-node closed form needs lambda, mu > 0");
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  TwoNodePrediction out;
  if (lambda == mu) {
    out.balanced = true;
    out.gamma = (tau + 1.0) * std::sqrt(2.0 * theta * rho * (1.0 - rho) * (lambda + mu) / std::numbers::pi);
    return out;
  }
  out.decay_rate = rho * (lambda - mu) * (lambda - mu) / (2.0 * (1.0 - rho) * (lambda + mu));
  out.envelope = std::exp(-out.decay_rate * theta) / std::sqrt(theta);
  return out;
}

std::string curve_to_csv(const PofCurve& curve) {
  std::ostringstream os;
  os << "theta,gamma_mean,gamma_stderr,gamma_over_theta\n";
  for (const auto& p : curve.points) {
    os << p.theta << ',' << format_double(p.gamma_mean) << ',' << format_double(p.gamma_stderr) << ','
       << format_double(p.gamma_over_theta()) << '\n';
  }
  return os.str();
}

}  // namespace modfrag
