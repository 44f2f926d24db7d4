#pragma once

// Gaussian martingale noise on the torus V_n, correlated modulo V_n.
//
// The covariance rate a^j(t) fixes E[W^j_s W^k_t] = int_0^{min(s,t)} a^{(k-j) mod V_n}(r) dr.
// Its torus spectrum a~^{n,k}(t) must be nonnegative; the noise is synthesised
// as a moving average of independent Brownian motions,
//     dW^j = sum_k c^{n,k}(t) dB^{(j-k) mod V_n},   c^{n,.} = DFT^{-1} sqrt(a~^{n,.}),
// with the filter evaluated at the left end of each step.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lattice_ldp/fft.hpp"
#include "lattice_ldp/lattice.hpp"
#include "lattice_ldp/parallel.hpp"

namespace lattice_ldp {

enum class CovarianceFamily {
  site_white,        // a^j = sigma2 [j == 0]
  geometric,         // a^j = sigma2 rho^{|j|_1}
  nearest_neighbor,  // a^0 = sigma2, a^{+-e_p} = sigma2 rho; admissible iff rho <= 1/(2d)
};

enum class TimeProfile {
  constant,  // g(t) = 1
  ramp,      // g(t) = 1 + t
};

CovarianceFamily parse_covariance_family(const std::string& name);
std::string to_string(CovarianceFamily family);
TimeProfile parse_time_profile(const std::string& name);
std::string to_string(TimeProfile profile);

struct CovarianceSpec {
  CovarianceFamily family = CovarianceFamily::geometric;
  double sigma2 = 1.0;
  double rho = 0.4;
  TimeProfile profile = TimeProfile::constant;

  double time_factor(double t) const;
  /// a^j(t) for any lattice offset j.
  double rate(const LatticeIndex& j, int dim, double t) const;
  /// Continuous spectrum a~(t, theta) = sum_j exp(-i <j,theta>) a^j(t).
  double spectrum(std::span<const double> theta, double t) const;
  bool time_constant() const { return profile == TimeProfile::constant; }
};

struct SpectralOptions {
  /// Per-dimension size of the quadrature grid for the limit filters; 0 picks a default.
  int limit_grid = 0;
  /// Time samples used for the eta diagnostics of time-varying specs.
  std::size_t eta_time_samples = 101;
};

class SpectralNoiseModel {
 public:
  const LatticeShape& shape() const noexcept { return shape_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const CovarianceSpec& spec() const noexcept { return spec_; }
  bool time_constant() const noexcept { return spectrum_.size() == 1; }

  /// a~^{n,k}(t_step) over V_n in lattice order (clamped at zero).
  std::span<const double> spectrum(std::size_t step) const;
  std::span<const double> sqrt_spectrum(std::size_t step) const;
  /// c^{n,k}(t_step) over V_n.
  std::vector<double> filter(std::size_t step) const;
  double a_max() const noexcept { return a_max_; }

  /// Limit filters c^j are resolved on |j|_inf <= eta_radius().
  int eta_radius() const noexcept { return eta_shape_.radius(); }
  int limit_grid() const noexcept { return limit_grid_; }
  /// c^j at the first eta sample time (t = 0), over V_{eta_radius}.
  std::span<const double> limit_filter() const noexcept { return limit_filter_; }
  /// eta_{n,j} over V_{eta_radius} in lattice order.
  std::span<const double> eta() const noexcept { return eta_; }
  double eta(const LatticeIndex& j) const;
  double eta_star() const noexcept { return eta_star_; }
  /// max |c^j(M) - c^j(2M)| at t = 0.
  double richardson_error() const noexcept { return richardson_error_; }

  friend SpectralNoiseModel build_spectral_model(const CovarianceSpec&, const LatticeShape&,
                                                 const TimeGrid&, const SpectralOptions&);

 private:
  std::size_t slice(std::size_t step) const { return spectrum_.size() == 1 ? 0 : step; }

  LatticeShape shape_;
  TimeGrid grid_;
  CovarianceSpec spec_;
  std::vector<std::vector<double>> spectrum_;
  std::vector<std::vector<double>> sqrt_spectrum_;
  double a_max_ = 0.0;

  LatticeShape eta_shape_;
  int limit_grid_ = 0;
  std::vector<double> limit_filter_;
  std::vector<double> eta_;
  double eta_star_ = 0.0;
  double richardson_error_ = 0.0;
};

/// Throws NEGATIVE_SPECTRUM if any a~^{n,k}(t) < -1e-12.
SpectralNoiseModel build_spectral_model(const CovarianceSpec& spec, const LatticeShape& shape,
                                        const TimeGrid& grid, const SpectralOptions& options = {});

/// Per-worker increment generator.
class NoiseSynthesizer {
 public:
  explicit NoiseSynthesizer(const SpectralNoiseModel& model);

  /// Draws |V_n| iid N(0, dt) increments from `engine` (site order) and writes
  /// the correlated increment W(t_{step+1}) - W(t_step) into `out`.
  void increment(std::size_t step, Engine& engine, std::span<double> out);
  /// Same draw with drift * dt added to every white increment; returns the sum of
  /// the drifted white increments over sites.
  double tilted_increment(std::size_t step, Engine& engine, std::span<double> out, double drift);

 private:
  const SpectralNoiseModel* model_;
  TorusDft dft_;
  std::normal_distribution<double> normal_;
  std::vector<double> white_;
  bool white_fast_path_ = false;
};

/// Steps 0, every, 2*every, ... and always the final step.
std::vector<std::size_t> record_schedule(const TimeGrid& grid, std::size_t every);

struct SamplingOptions {
  std::size_t record_every = 1;
  unsigned workers = 1;
};

struct NoiseEnsemble {
  LatticeShape shape;
  TimeGrid grid;
  std::uint64_t seed = 0;
  std::vector<std::size_t> recorded_steps;
  /// One field per replica over the recorded steps.
  std::vector<PathField> paths;
  /// sup_t |W^j_t| over the full grid, per replica and site.
  std::vector<std::vector<double>> sup_norms;

  std::size_t replica_count() const { return paths.size(); }
  /// Position of `step` among recorded_steps; throws if it was not recorded.
  std::size_t recorded_position(std::size_t step) const;
};

/// Replica r draws from replica_engine(seed, r); results do not depend on the worker count.
NoiseEnsemble sample_noise_paths(const SpectralNoiseModel& model, std::size_t replicas,
                                 std::uint64_t seed, const SamplingOptions& options = {});

struct CovarianceEntry {
  LatticeIndex first{0, 0, 0};
  LatticeIndex second{0, 0, 0};
  double s = 0.0;
  double t = 0.0;
  double empirical = 0.0;
  double expected = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
};

struct CovarianceReport {
  std::vector<CovarianceEntry> entries;
  double max_abs_deviation = 0.0;
  double max_abs_z = 0.0;

  bool within(double sigmas) const { return max_abs_z <= sigmas; }
};

/// E[W^j_s W^k_t] against int_0^{min(s,t)} a^{(k-j) mod V_n}(r) dr (trapezoid on the grid).
/// Every requested time must be a recorded time.
CovarianceReport verify_covariance(const NoiseEnsemble& ensemble, const SpectralNoiseModel& model,
                                   std::span<const std::pair<LatticeIndex, LatticeIndex>> site_pairs,
                                   std::span<const std::pair<double, double>> time_pairs);

/// Exact covariance integral used by verify_covariance.
double covariance_integral(const SpectralNoiseModel& model, const LatticeIndex& offset, double s,
                           double t);

struct TailEstimate {
  double a = 0.0;
  std::size_t hits = 0;
  double probability = 0.0;
  /// log(probability) / |V_n|; -inf when no replica exceeded the level.
  double log_probability_per_site = 0.0;
};

/// P(sum_j ||W^j||_T > a |V_n|) for each a.
std::vector<TailEstimate> tail_statistic(const NoiseEnsemble& ensemble,
                                         std::span<const double> a_values);

struct SupTailRow {
  double b = 0.0;
  double empirical = 0.0;
  /// int_b^inf 4 (2 pi T)^{-1/2} exp(-x^2 / 2T) dx
  double bound = 0.0;
  double standard_error = 0.0;
  bool within = false;  // empirical <= bound + 4 standard errors
};

struct TiltedTailEstimate {
  double a = 0.0;
  double drift = 0.0;
  std::size_t hits = 0;  // under the tilted law
  double probability = 0.0;
  double standard_error = 0.0;
  /// log(probability) / |V_n|; -inf when no tilted replica reached the level.
  double log_probability_per_site = 0.0;
};

/// Importance-sampled P(sum_j ||W^j||_T > a |V_n|). Each replica drives every white
/// source with drift +theta or -theta (equal odds), and hits are reweighted by
/// exp(theta^2 T |V_n| / 2) / cosh(theta sum_k B^k_T).
/// A negative drift picks theta = a / (c~ T), with c~ the zero-frequency filter gain
/// at t = 0, so that the tilted mean path sits near the level.
TiltedTailEstimate tilted_tail_estimate(const SpectralNoiseModel& model, double a,
                                        std::size_t replicas, std::uint64_t seed,
                                        double drift = -1.0, unsigned workers = 1);

double reflection_bound(double b, double horizon);

/// Scalar Brownian paths on `steps` grid steps; checks P(||B||_T >= b) against the bound.
std::vector<SupTailRow> brownian_sup_tail_check(std::size_t replicas, double horizon,
                                                std::size_t steps, std::span<const double> b_values,
                                                std::uint64_t seed, unsigned workers = 1);

}  // namespace lattice_ldp
