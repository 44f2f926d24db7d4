#include "lattice_ldp/deviations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lattice_ldp/error.hpp"
#include "lattice_ldp/path_io.hpp"

namespace lattice_ldp {

namespace {

double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double quantile7(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values.front();
  const double h = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

ObservableRegistry ObservableRegistry::with_builtins() {
  ObservableRegistry registry;
  registry.register_observable("site0_sup", [](const ReplicaResult& r, const LatticeShape& shape) {
    return r.v_sup[shape.flat({0, 0, 0})];
  });
  registry.register_observable("spatial_mean_sup", [](const ReplicaResult& r, const LatticeShape&) {
    return sorted_mean(r.v_sup);
  });
  registry.register_observable("terminal_mean", [](const ReplicaResult& r, const LatticeShape&) {
    return sorted_mean(r.terminal_v);
  });
  registry.register_observable("noise_mass", [](const ReplicaResult& r, const LatticeShape&) {
    return sorted_mean(r.noise_sup);
  });
  return registry;
}

const Observable& ObservableRegistry::register_observable(const std::string& name,
                                                          ObservableFn evaluate) {
  if (name.empty()) fail(ErrorCode::invalid_argument, "observable name must not be empty");
  if (contains(name)) fail(ErrorCode::duplicate_name, "observable '" + name + "' already registered");
  return entries_.emplace(name, Observable{name, std::move(evaluate)}).first->second;
}

const Observable& ObservableRegistry::find(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) fail(ErrorCode::invalid_argument, "unknown observable '" + name + "'");
  return it->second;
}

std::vector<std::string> ObservableRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

Interval wilson_interval(std::size_t hits, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  // the bounds are exactly 0 and 1 at the extremes; avoid roundoff there
  const double lo = hits == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = hits == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

RareEventEstimate estimate_from_values(std::span<const double> values, double threshold) {
  RareEventEstimate est;
  est.threshold = threshold;
  est.replicas = values.size();
  est.hits = static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double v) { return v > threshold; }));
  est.p_hat = values.empty() ? 0.0 : static_cast<double>(est.hits) / static_cast<double>(values.size());
  est.ci = wilson_interval(est.hits, est.replicas);
  est.zero_hits = est.hits == 0;
  return est;
}

std::vector<double> simulate_observable(const Scenario& scenario, const Observable& observable,
                                        std::size_t replicas, std::uint64_t seed,
                                        unsigned workers) {
  const LatticeShape shape(scenario.dim, scenario.radius);
  const auto grid = TimeGrid::from_step(scenario.horizon, scenario.dt);
  const auto kernel = build_kappa(scenario.dim, scenario.kappa);
  const auto noise = build_spectral_model(scenario.noise, shape, grid);
  SimulationOptions options;
  options.seed = seed;
  options.workers = workers;
  // Observables only need per-site sups and terminal values.
  options.record_every = grid.steps();
  options.replicas = replicas;
  const auto run = simulate_network(scenario.model, kernel, noise, options);
  std::vector<double> values;
  values.reserve(replicas);
  for (const auto& r : run.replicas) values.push_back(observable.evaluate(r, shape));
  return values;
}

RareEventEstimate estimate_rare_event(const Scenario& scenario, const Observable& observable,
                                      double threshold, std::size_t replicas, std::uint64_t seed,
                                      unsigned workers) {
  if (replicas < 100) fail(ErrorCode::invalid_argument, "rare-event estimates need >= 100 replicas");
  const auto values = simulate_observable(scenario, observable, replicas, seed, workers);
  return estimate_from_values(values, threshold);
}

std::vector<ScalingRow> ldp_scaling_report(const Scenario& base, std::span<const int> n_values,
                                           const Observable& observable,
                                           const ScalingOptions& options) {
  if (n_values.empty()) fail(ErrorCode::invalid_argument, "empty n list");
  std::vector<int> ns(n_values.begin(), n_values.end());
  std::vector<ScalingRow> rows;
  std::optional<double> threshold = options.threshold;
  const int smallest = *std::min_element(ns.begin(), ns.end());
  std::vector<double> smallest_values;
  if (!threshold) {
    auto scenario = base;
    scenario.radius = smallest;
    if (scenario.model.learning.support > smallest) scenario.model.learning.support = smallest;
    smallest_values = simulate_observable(scenario, observable, options.replicas, options.seed,
                                          options.workers);
    threshold = quantile7(smallest_values, options.auto_quantile);
  }
  for (int n : ns) {
    auto scenario = base;
    scenario.radius = n;
    // a fixed synapse support cannot exceed the smaller lattices of the study
    if (scenario.model.learning.support > n) scenario.model.learning.support = n;
    const auto values = (n == smallest && !smallest_values.empty())
                            ? smallest_values
                            : simulate_observable(scenario, observable, options.replicas,
                                                  options.seed, options.workers);
    ScalingRow row;
    row.n = n;
    row.sites = LatticeShape(base.dim, n).site_count();
    row.estimate = estimate_from_values(values, *threshold);
    row.norm_log_p = row.estimate.zero_hits
                         ? std::numeric_limits<double>::infinity()
                         : -std::log(row.estimate.p_hat) / static_cast<double>(row.sites);
    rows.push_back(row);
  }
  return rows;
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows) {
  out << "n,sites,replicas,threshold,hits,p_hat,ci_lo,ci_hi,norm_log_p\n";
  for (const auto& row : rows) {
    const auto& e = row.estimate;
    out << row.n << ',' << row.sites << ',' << e.replicas << ',' << format_double(e.threshold) << ','
        << e.hits << ',' << format_double(e.p_hat) << ',' << format_double(e.ci.lo) << ','
        << format_double(e.ci.hi) << ',' << format_double(row.norm_log_p) << '\n';
  }
}

}  // namespace lattice_ldp
