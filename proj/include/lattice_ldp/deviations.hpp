#pragma once

// Plain Monte Carlo rare-event estimates and finite-size scaling of
// (1/|V_n|) log P for observables of the network paths.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lattice_ldp/dynamics.hpp"
#include "lattice_ldp/kernels.hpp"
#include "lattice_ldp/noise.hpp"

namespace lattice_ldp {

using ObservableFn = std::function<double(const ReplicaResult&, const LatticeShape&)>;

struct Observable {
  std::string name;
  ObservableFn evaluate;
};

/// Built-ins: site0_sup, spatial_mean_sup, terminal_mean, noise_mass.
class ObservableRegistry {
 public:
  static ObservableRegistry with_builtins();

  /// Throws DUPLICATE_NAME if the name is taken.
  const Observable& register_observable(const std::string& name, ObservableFn evaluate);
  /// Throws INVALID_ARGUMENT for unknown names.
  const Observable& find(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Observable> entries_;
};

/// Everything needed to simulate one lattice size.
struct Scenario {
  NetworkModel model;
  KappaSpec kappa;
  CovarianceSpec noise;
  int dim = 1;
  int radius = 4;
  double horizon = 1.0;
  double dt = 1e-3;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval at the given normal quantile (default 95%).
Interval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.959963984540054);

struct RareEventEstimate {
  double threshold = 0.0;
  std::size_t replicas = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  Interval ci;
  /// No replica exceeded the threshold; only ci.hi is informative.
  bool zero_hits = false;
};

/// P(observable > threshold) from already evaluated replicas.
RareEventEstimate estimate_from_values(std::span<const double> values, double threshold);

/// Observable values of `replicas` fresh replicas of the scenario at its radius.
std::vector<double> simulate_observable(const Scenario& scenario, const Observable& observable,
                                        std::size_t replicas, std::uint64_t seed,
                                        unsigned workers = 1);

/// Requires at least 100 replicas.
RareEventEstimate estimate_rare_event(const Scenario& scenario, const Observable& observable,
                                      double threshold, std::size_t replicas, std::uint64_t seed,
                                      unsigned workers = 1);

struct ScalingRow {
  int n = 0;
  std::size_t sites = 0;
  RareEventEstimate estimate;
  /// -log(p_hat) / |V_n|; +inf with zero hits.
  double norm_log_p = 0.0;
};

struct ScalingOptions {
  /// Fixed threshold, or the auto_quantile quantile of the observable at the smallest n.
  std::optional<double> threshold;
  double auto_quantile = 0.9;
  std::size_t replicas = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

std::vector<ScalingRow> ldp_scaling_report(const Scenario& base, std::span<const int> n_values,
                                           const Observable& observable,
                                           const ScalingOptions& options);

/// Columns: n,sites,replicas,threshold,hits,p_hat,ci_lo,ci_hi,norm_log_p
void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows);

}  // namespace lattice_ldp
