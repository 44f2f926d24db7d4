#pragma once

// FitzHugh-Nagumo lattice network with chemical synapses and Hebbian plasticity.
//
//   dv^j = (v^j - (v^j)^3/3 - w^j + sum_k J^{j,k} f1(v^j) f2(v^{(j+k) mod V_n})) dt + dW^j
//   dw^j = (v^j + a - c w^j) dt
//   dJ^{j,k}/dt = J_corr (Jbar^k - J^{j,k}) act(v^j) act(v^{(j+k) mod V_n}) - J_dec J^{j,k}
//
// integrated by explicit Euler-Maruyama. All sites read the state at the start
// of the step, and J is clamped to [0, Jbar^k] after each step.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lattice_ldp/kernels.hpp"
#include "lattice_ldp/lattice.hpp"
#include "lattice_ldp/noise.hpp"

namespace lattice_ldp {

struct ResponseFunction {
  enum class Kind { logistic, tanh, zero, one };
  Kind kind = Kind::logistic;

  double operator()(double x) const;
  /// sup |f|
  double bound() const;
  double lipschitz() const;
};

ResponseFunction parse_response(const std::string& name);
std::string to_string(const ResponseFunction& f);

struct FhnParams {
  double a_fr = 0.3;
  double c_fr = 1.0;
  double u_ini = 0.0;
  ResponseFunction f1;
  ResponseFunction f2;

  double f_bar() const;
};

struct LearningParams {
  double j_bar0 = 0.5;
  double rho_j = 0.4;
  /// Synapse support radius (sup norm); negative means min(n, 6).
  int support = -1;
  double j_corr = 1.0;
  double j_dec = 0.5;
  /// J_ini^k = fraction * Jbar^k.
  double j_ini_fraction = 0.5;
  ResponseFunction activity;

  int resolved_support(int radius) const;
  /// Jbar^k = j_bar0 rho_j^{|k|_1}
  double j_bar(const LatticeIndex& k, int dim) const;
};

struct NetworkModel {
  FhnParams fhn;
  LearningParams learning;
};

/// Throws config_invalid unless c > 0, a >= 0, 0 <= J_ini <= Jbar, the synapse
/// support fits in V_n and kappa^k >= Jbar^k fbar^2 on the support.
void validate_network(const NetworkModel& model, const KernelFamily& kernel,
                      const LatticeShape& shape);

/// Synapse offsets of sup norm <= radius, lexicographic.
std::vector<LatticeIndex> synapse_offsets(int dim, int radius);

class SynapticState {
 public:
  SynapticState() = default;
  SynapticState(const LatticeShape& shape, const LearningParams& learning,
                std::vector<LatticeIndex> offsets);

  const LatticeShape& shape() const noexcept { return shape_; }
  std::span<const LatticeIndex> offsets() const noexcept { return offsets_; }
  std::span<const double> j_bar() const noexcept { return j_bar_; }
  /// values()[site * offsets + o]
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double value(std::size_t site, std::size_t offset) const {
    return values_[site * offsets_.size() + offset];
  }
  std::size_t neighbor(std::size_t site, std::size_t offset) const {
    return neighbors_[site * offsets_.size() + offset];
  }

  /// sum_k J^{j,k} f1(v^j) f2(v^{(j+k) mod V_n})
  double interaction_sum(std::span<const double> v, std::size_t site, const FhnParams& fhn) const;

  /// Euler step of the Hebbian ODE, then clamp. Returns how many entries needed clamping.
  std::size_t hebbian_step(std::span<const double> v, const LearningParams& learning, double dt);

  /// min over entries of min(J, Jbar - J); nonnegative when the invariant holds.
  double bound_margin() const;
  double mean() const;

 private:
  LatticeShape shape_;
  std::vector<LatticeIndex> offsets_;
  std::vector<double> j_bar_;
  std::vector<double> values_;
  std::vector<std::size_t> neighbors_;
  std::vector<double> activity_;
};

struct SynapseSummary {
  double min_margin = 0.0;  // over every step and entry
  std::size_t clamp_events = 0;
  double terminal_mean = 0.0;
};

struct ReplicaResult {
  PathField v;
  PathField w;
  PathField noise;  // empty unless kept
  std::vector<double> v_sup;
  std::vector<double> noise_sup;
  std::vector<double> terminal_v;
  SynapseSummary synapses;
};

struct PathEnsemble {
  LatticeShape shape;
  TimeGrid grid;
  std::uint64_t seed = 0;
  std::vector<std::size_t> recorded_steps;
  std::vector<ReplicaResult> replicas;
};

struct SimulationOptions {
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t record_every = 1;
  bool keep_noise = false;
};

/// Noise is drawn exactly as sample_noise_paths draws it for the same seed.
PathEnsemble simulate_network(const NetworkModel& model, const KernelFamily& kernel,
                              const SpectralNoiseModel& noise, const SimulationOptions& options);

/// Drives the network with a supplied ensemble recorded at every step.
PathEnsemble simulate_network(const NetworkModel& model, const KernelFamily& kernel,
                              const NoiseEnsemble& noise, const SimulationOptions& options);

/// Psi^n on the torus V_m: v-paths for X_t = U_ini + int drift + w_t, with interactions
/// restricted to synapse offsets in V_n. The synapse support must fit in V_m.
PathField solve_driven(const PathField& drive, const TimeGrid& grid, int truncation,
                       const NetworkModel& model);

struct ModelConstants {
  double c_tilde = 0.0;  // 1 + 1/c + T/c
  double c = 0.0;        // c_tilde + kappa_*
  double kappa_star = 0.0;
  double log_psi_c = 0.0;  // log of sqrt(8 exp(4 T^2 kappa_*^2 e^{2CT} + 2CT))
};

ModelConstants model_constants(const FhnParams& fhn, const KernelFamily& kernel, double horizon);

struct LipschitzReport {
  double ratio = 0.0;
  double log_ratio = 0.0;
  double log_psi_c = 0.0;
  bool within = false;
};

/// ||Psi(w) - Psi(u)||_{T,lambda} / ||w - u||_{T,lambda}; DIVISION_DEGENERATE when w = u.
LipschitzReport lipschitz_ratio(const PathField& w, const PathField& u, const TimeGrid& grid,
                                const NetworkModel& model, const KernelFamily& kernel);

struct TruncationGap {
  int n = 0;
  double gap = 0.0;         // sum_j ||Psi(w)^j - Psi^n(w)^j||_T
  double kappa_tail = 0.0;  // kappa-bar_n
  double input_mass = 0.0;  // sum_j ||w^j||_T
  double bound_ratio = 0.0; // gap / (kappa-bar_n (|V_m| + input_mass))
};

TruncationGap truncation_gap(const PathField& w, const TimeGrid& grid, int n,
                             const NetworkModel& model, const KernelFamily& kernel);

struct GrowthRow {
  double alpha = 0.0;
  double lhs = 0.0;  // sum_j ||Psi(w)^j||_alpha
  double rhs = 0.0;
  bool holds = false;
};

/// sum_j ||Psi(w)^j||_alpha <= e^{(C + kappa_*) alpha} (|V_m| (|U_ini| + alpha B) + 2 sum_j ||w^j||_alpha)
/// with B = kappa_* + a / c, at every grid time alpha in `alphas`.
std::vector<GrowthRow> growth_bound_check(const PathField& w, const TimeGrid& grid,
                                          std::span<const double> alphas,
                                          const NetworkModel& model, const KernelFamily& kernel);

struct EulerConvergence {
  std::vector<double> dts;
  /// sup_j |v^j_T(dt_i) - v^j_T(dt_{i+1})|
  std::vector<double> differences;
  std::vector<double> ratios;
};

/// Noise-free runs at dt, dt/2, ..., dt/2^(levels-1) on V_n.
EulerConvergence euler_self_convergence(const NetworkModel& model, const LatticeShape& shape,
                                        double horizon, double dt, int levels = 3);

/// Brownian drive on V_m for property tests: independent unit-rate paths, W_0 = 0.
PathField brownian_drive(const LatticeShape& shape, const TimeGrid& grid, Engine& engine,
                         double scale = 1.0);

}  // namespace lattice_ldp
