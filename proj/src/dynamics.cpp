#include "lattice_ldp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lattice_ldp/error.hpp"
#include "lattice_ldp/parallel.hpp"

namespace lattice_ldp {

double ResponseFunction::operator()(double x) const {
  switch (kind) {
    case Kind::logistic: return 1.0 / (1.0 + std::exp(-x));
    case Kind::tanh: return std::tanh(x);
    case Kind::zero: return 0.0;
    case Kind::one: return 1.0;
  }
  return 0.0;
}

double ResponseFunction::bound() const { return kind == Kind::zero ? 0.0 : 1.0; }

double ResponseFunction::lipschitz() const {
  switch (kind) {
    case Kind::logistic: return 0.25;
    case Kind::tanh: return 1.0;
    default: return 0.0;
  }
}

ResponseFunction parse_response(const std::string& name) {
  if (name == "logistic") return {ResponseFunction::Kind::logistic};
  if (name == "tanh") return {ResponseFunction::Kind::tanh};
  if (name == "zero") return {ResponseFunction::Kind::zero};
  if (name == "one") return {ResponseFunction::Kind::one};
  fail(ErrorCode::invalid_argument, "unknown response function '" + name + "'");
}

std::string to_string(const ResponseFunction& f) {
  switch (f.kind) {
    case ResponseFunction::Kind::logistic: return "logistic";
    case ResponseFunction::Kind::tanh: return "tanh";
    case ResponseFunction::Kind::zero: return "zero";
    case ResponseFunction::Kind::one: return "one";
  }
  return "?";
}

double FhnParams::f_bar() const { return std::max(f1.bound(), f2.bound()); }

int LearningParams::resolved_support(int radius) const {
  return support < 0 ? std::min(radius, 6) : support;
}

double LearningParams::j_bar(const LatticeIndex& k, int dim) const {
  return j_bar0 * std::pow(rho_j, l1_norm(k, dim));
}

std::vector<LatticeIndex> synapse_offsets(int dim, int radius) {
  return cube_indices(LatticeShape(dim, radius));
}

void validate_network(const NetworkModel& model, const KernelFamily& kernel,
                      const LatticeShape& shape) {
  const auto& fhn = model.fhn;
  const auto& learning = model.learning;
  auto bad = [](const std::string& msg) { fail(ErrorCode::config_invalid, msg); };
  if (!(fhn.c_fr > 0.0) || !std::isfinite(fhn.c_fr)) bad("fhn.c_fr must be > 0");
  if (!(fhn.a_fr >= 0.0) || !std::isfinite(fhn.a_fr)) bad("fhn.a_fr must be >= 0");
  if (!std::isfinite(fhn.u_ini)) bad("fhn.u_ini must be finite");
  if (!(learning.j_bar0 >= 0.0) || !(learning.rho_j >= 0.0) || !(learning.rho_j < 1.0)) {
    bad("learning needs J_bar0 >= 0 and 0 <= rho_J < 1");
  }
  if (!(learning.j_corr >= 0.0) || !(learning.j_dec >= 0.0)) bad("J_corr and J_dec must be >= 0");
  if (!(learning.j_ini_fraction >= 0.0 && learning.j_ini_fraction <= 1.0)) {
    bad("J_ini fraction must lie in [0, 1]");
  }
  if (kernel.dim() != shape.dim()) bad("kernel dimension differs from the lattice dimension");
  const int support = learning.resolved_support(shape.radius());
  if (support > shape.radius()) {
    bad("synapse support R_J=" + std::to_string(support) + " exceeds n=" +
        std::to_string(shape.radius()));
  }
  // Sampled check of the declared response bounds.
  for (int i = -200; i <= 200; ++i) {
    const double x = 0.25 * i;
    for (const auto* f : {&fhn.f1, &fhn.f2, &learning.activity}) {
      if (std::abs((*f)(x)) > f->bound() + 1e-15) bad("response function exceeds its bound");
    }
  }
  const double fbar2 = fhn.f_bar() * fhn.f_bar();
  for (const auto& k : synapse_offsets(shape.dim(), support)) {
    const double need = learning.j_bar(k, shape.dim()) * fbar2;
    if (kernel.kappa(k) < need * (1.0 - 1e-12)) {
      std::ostringstream msg;
      msg << "kappa^k=" << kernel.kappa(k) << " < Jbar^k fbar^2=" << need
          << " at k=" << format_index(k, shape.dim());
      bad(msg.str());
    }
  }
}

SynapticState::SynapticState(const LatticeShape& shape, const LearningParams& learning,
                             std::vector<LatticeIndex> offsets)
    : shape_(shape), offsets_(std::move(offsets)) {
  j_bar_.reserve(offsets_.size());
  for (const auto& k : offsets_) j_bar_.push_back(learning.j_bar(k, shape.dim()));
  const std::size_t sites = shape.site_count();
  values_.resize(sites * offsets_.size());
  for (std::size_t s = 0; s < sites; ++s) {
    for (std::size_t o = 0; o < offsets_.size(); ++o) {
      values_[s * offsets_.size() + o] = learning.j_ini_fraction * j_bar_[o];
    }
  }
  neighbors_ = neighbor_table(shape, offsets_);
  activity_.resize(sites);
}

double SynapticState::interaction_sum(std::span<const double> v, std::size_t site,
                                      const FhnParams& fhn) const {
  double total = 0.0;
  const std::size_t count = offsets_.size();
  for (std::size_t o = 0; o < count; ++o) {
    total += values_[site * count + o] * fhn.f2(v[neighbors_[site * count + o]]);
  }
  return fhn.f1(v[site]) * total;
}

std::size_t SynapticState::hebbian_step(std::span<const double> v, const LearningParams& learning,
                                        double dt) {
  const std::size_t sites = shape_.site_count(), count = offsets_.size();
  for (std::size_t s = 0; s < sites; ++s) activity_[s] = learning.activity(v[s]);
  std::size_t clamped = 0;
  for (std::size_t s = 0; s < sites; ++s) {
    for (std::size_t o = 0; o < count; ++o) {
      double& j = values_[s * count + o];
      const double rate = learning.j_corr * (j_bar_[o] - j) * activity_[s] *
                              activity_[neighbors_[s * count + o]] -
                          learning.j_dec * j;
      j += dt * rate;
      if (j < 0.0) {
        j = 0.0;
        ++clamped;
      } else if (j > j_bar_[o]) {
        j = j_bar_[o];
        ++clamped;
      }
    }
  }
  return clamped;
}

double SynapticState::bound_margin() const {
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t count = offsets_.size();
  for (std::size_t i = 0; i < values_.size(); ++i) {
    margin = std::min({margin, values_[i], j_bar_[i % count] - values_[i]});
  }
  return margin;
}

double SynapticState::mean() const {
  if (values_.empty()) return 0.0;
  double total = 0.0;
  for (double j : values_) total += j;
  return total / static_cast<double>(values_.size());
}

namespace {

// One replica's (v, w, J) state and the synchronous Euler update.
class Integrator {
 public:
  Integrator(const LatticeShape& shape, const NetworkModel& model,
             std::vector<LatticeIndex> offsets)
      : model_(model),
        synapses_(shape, model.learning, std::move(offsets)),
        v_(shape.site_count(), model.fhn.u_ini),
        w_(shape.site_count(), 0.0),
        next_v_(shape.site_count()),
        f2_(shape.site_count()) {}

  std::span<const double> v() const { return v_; }
  std::span<const double> w() const { return w_; }
  const SynapticState& synapses() const { return synapses_; }

  /// Advances by dt with additive increment `drive`; returns Hebbian clamp count.
  std::size_t step(double dt, std::span<const double> drive, double t_end) {
    const auto& fhn = model_.fhn;
    const std::size_t sites = v_.size(), count = synapses_.offsets().size();
    const auto j = synapses_.values();
    for (std::size_t s = 0; s < sites; ++s) f2_[s] = fhn.f2(v_[s]);
    for (std::size_t s = 0; s < sites; ++s) {
      double coupling = 0.0;
      for (std::size_t o = 0; o < count; ++o) {
        coupling += j[s * count + o] * f2_[synapses_.neighbor(s, o)];
      }
      coupling *= fhn.f1(v_[s]);
      const double v = v_[s], w = w_[s];
      next_v_[s] = v + dt * (v - v * v * v / 3.0 - w + coupling) + drive[s];
      w_[s] = w + dt * (v + fhn.a_fr - fhn.c_fr * w);
      if (!std::isfinite(next_v_[s]) || !std::isfinite(w_[s])) {
        std::ostringstream msg;
        msg << "state at site " << format_index(synapses_.shape().index(s), synapses_.shape().dim())
            << " became non-finite at t=" << t_end << " (reduce dt)";
        fail(ErrorCode::nonfinite_state, msg.str());
      }
    }
    const std::size_t clamped = synapses_.hebbian_step(v_, model_.learning, dt);
    v_.swap(next_v_);
    return clamped;
  }

 private:
  const NetworkModel& model_;
  SynapticState synapses_;
  std::vector<double> v_, w_, next_v_, f2_;
};

struct ReplicaRecorder {
  ReplicaRecorder(const LatticeShape& shape, const std::vector<std::size_t>& steps, bool keep_noise)
      : steps(steps), keep_noise(keep_noise) {
    result.v = PathField(shape, steps.size());
    result.w = PathField(shape, steps.size());
    if (keep_noise) result.noise = PathField(shape, steps.size());
    result.v_sup.assign(shape.site_count(), 0.0);
    result.noise_sup.assign(shape.site_count(), 0.0);
    noise.assign(shape.site_count(), 0.0);
    result.synapses.min_margin = std::numeric_limits<double>::infinity();
  }

  void observe(std::size_t step, const Integrator& state, std::span<const double> delta) {
    const auto v = state.v();
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (step > 0) noise[s] += delta[s];
      result.v_sup[s] = std::max(result.v_sup[s], std::abs(v[s]));
      result.noise_sup[s] = std::max(result.noise_sup[s], std::abs(noise[s]));
    }
    result.synapses.min_margin = std::min(result.synapses.min_margin, state.synapses().bound_margin());
    if (next < steps.size() && steps[next] == step) {
      std::copy(v.begin(), v.end(), result.v.row(next).begin());
      std::copy(state.w().begin(), state.w().end(), result.w.row(next).begin());
      if (keep_noise) std::copy(noise.begin(), noise.end(), result.noise.row(next).begin());
      ++next;
    }
  }

  ReplicaResult finish(const Integrator& state) {
    result.terminal_v.assign(state.v().begin(), state.v().end());
    result.synapses.terminal_mean = state.synapses().mean();
    return std::move(result);
  }

  const std::vector<std::size_t>& steps;
  bool keep_noise;
  std::size_t next = 0;
  std::vector<double> noise;
  ReplicaResult result;
};

template <class NoiseSource>
PathEnsemble run_ensemble(const NetworkModel& model, const LatticeShape& shape,
                          const TimeGrid& grid, const SimulationOptions& options,
                          std::size_t replicas, NoiseSource&& make_source) {
  PathEnsemble ensemble;
  ensemble.shape = shape;
  ensemble.grid = grid;
  ensemble.seed = options.seed;
  ensemble.recorded_steps = record_schedule(grid, options.record_every);
  ensemble.replicas.resize(replicas);
  const auto offsets =
      synapse_offsets(shape.dim(), model.learning.resolved_support(shape.radius()));
  const unsigned workers = std::max(1u, options.workers);
  auto sources = make_source(workers);
  parallel_for(replicas, workers, [&](std::size_t r, unsigned worker) {
    auto& source = sources[worker];
    source.start(r);
    Integrator state(shape, model, offsets);
    ReplicaRecorder recorder(shape, ensemble.recorded_steps, options.keep_noise);
    std::vector<double> delta(shape.site_count(), 0.0);
    recorder.observe(0, state, delta);
    for (std::size_t step = 0; step < grid.steps(); ++step) {
      source.increment(step, delta);
      recorder.result.synapses.clamp_events += state.step(grid.dt(), delta, grid.time(step + 1));
      recorder.observe(step + 1, state, delta);
    }
    ensemble.replicas[r] = recorder.finish(state);
  });
  return ensemble;
}

class SynthesizedNoise {
 public:
  SynthesizedNoise(const SpectralNoiseModel& model, std::uint64_t seed)
      : synth_(model), seed_(seed) {}
  void start(std::size_t replica) { engine_ = replica_engine(seed_, replica); }
  void increment(std::size_t step, std::span<double> out) { synth_.increment(step, engine_, out); }

 private:
  NoiseSynthesizer synth_;
  std::uint64_t seed_;
  Engine engine_;
};

class RecordedNoise {
 public:
  explicit RecordedNoise(const NoiseEnsemble& ensemble) : ensemble_(&ensemble) {}
  void start(std::size_t replica) { path_ = &ensemble_->paths[replica]; }
  void increment(std::size_t step, std::span<double> out) {
    const auto a = path_->row(step), b = path_->row(step + 1);
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = b[s] - a[s];
  }

 private:
  const NoiseEnsemble* ensemble_;
  const PathField* path_ = nullptr;
};

std::vector<double> sup_per_site(const PathField& field, std::size_t points) {
  return field.sup_norms(points);
}

double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace

PathEnsemble simulate_network(const NetworkModel& model, const KernelFamily& kernel,
                              const SpectralNoiseModel& noise, const SimulationOptions& options) {
  validate_network(model, kernel, noise.shape());
  return run_ensemble(model, noise.shape(), noise.grid(), options, options.replicas,
                      [&](unsigned workers) {
                        std::vector<SynthesizedNoise> sources;
                        sources.reserve(workers);
                        for (unsigned w = 0; w < workers; ++w) sources.emplace_back(noise, options.seed);
                        return sources;
                      });
}

PathEnsemble simulate_network(const NetworkModel& model, const KernelFamily& kernel,
                              const NoiseEnsemble& noise, const SimulationOptions& options) {
  validate_network(model, kernel, noise.shape);
  if (noise.recorded_steps.size() != noise.grid.points()) {
    fail(ErrorCode::invalid_argument, "driving noise must be recorded at every step");
  }
  auto opts = options;
  opts.seed = noise.seed;
  return run_ensemble(model, noise.shape, noise.grid, opts, noise.replica_count(),
                      [&](unsigned workers) {
                        return std::vector<RecordedNoise>(workers, RecordedNoise(noise));
                      });
}

PathField solve_driven(const PathField& drive, const TimeGrid& grid, int truncation,
                       const NetworkModel& model) {
  const auto& shape = drive.shape;
  if (drive.time_points != grid.points()) {
    fail(ErrorCode::invalid_argument, "drive must be sampled at every grid point");
  }
  for (double x : drive.row(0)) {
    if (x != 0.0) fail(ErrorCode::invalid_argument, "drive must vanish at t=0");
  }
  const int support = model.learning.resolved_support(shape.radius());
  if (support > shape.radius()) {
    fail(ErrorCode::invalid_argument, "synapse support does not fit in the torus");
  }
  if (truncation < 0) fail(ErrorCode::invalid_argument, "truncation radius must be >= 0");
  std::vector<LatticeIndex> offsets;
  for (const auto& k : synapse_offsets(shape.dim(), support)) {
    if (sup_norm(k, shape.dim()) <= truncation) offsets.push_back(k);
  }
  Integrator state(shape, model, std::move(offsets));
  PathField out(shape, grid.points());
  std::copy(state.v().begin(), state.v().end(), out.row(0).begin());
  std::vector<double> delta(shape.site_count());
  for (std::size_t step = 0; step < grid.steps(); ++step) {
    const auto a = drive.row(step), b = drive.row(step + 1);
    for (std::size_t s = 0; s < delta.size(); ++s) delta[s] = b[s] - a[s];
    state.step(grid.dt(), delta, grid.time(step + 1));
    std::copy(state.v().begin(), state.v().end(), out.row(step + 1).begin());
  }
  return out;
}

ModelConstants model_constants(const FhnParams& fhn, const KernelFamily& kernel, double horizon) {
  ModelConstants k;
  k.kappa_star = kernel.kappa_star();
  k.c_tilde = 1.0 + 1.0 / fhn.c_fr + horizon / fhn.c_fr;
  k.c = k.c_tilde + k.kappa_star;
  const double t = horizon;
  // log(Psi_C^2) = log 8 + 4 T^2 kappa_*^2 e^{2CT} + 2CT; the middle term is large
  const double log_sq = std::log(8.0) +
                        4.0 * t * t * k.kappa_star * k.kappa_star * std::exp(2.0 * k.c * t) +
                        2.0 * k.c * t;
  k.log_psi_c = 0.5 * log_sq;
  return k;
}

LipschitzReport lipschitz_ratio(const PathField& w, const PathField& u, const TimeGrid& grid,
                                const NetworkModel& model, const KernelFamily& kernel) {
  if (!(w.shape == u.shape) || w.time_points != u.time_points) {
    fail(ErrorCode::invalid_argument, "inputs must share shape and grid");
  }
  PathField diff_in(w.shape, w.time_points);
  for (std::size_t i = 0; i < diff_in.values.size(); ++i) diff_in.values[i] = w.values[i] - u.values[i];
  const double denom = weighted_norm(diff_in, kernel);
  if (denom == 0.0) fail(ErrorCode::division_degenerate, "inputs coincide in the weighted norm");
  const int m = w.shape.radius();
  const auto xw = solve_driven(w, grid, m, model), xu = solve_driven(u, grid, m, model);
  PathField diff_out(w.shape, w.time_points);
  for (std::size_t i = 0; i < diff_out.values.size(); ++i) {
    diff_out.values[i] = xw.values[i] - xu.values[i];
  }
  LipschitzReport report;
  report.ratio = weighted_norm(diff_out, kernel) / denom;
  report.log_ratio = std::log(report.ratio);
  report.log_psi_c = model_constants(model.fhn, kernel, grid.horizon()).log_psi_c;
  report.within = report.log_ratio <= report.log_psi_c;
  return report;
}

TruncationGap truncation_gap(const PathField& w, const TimeGrid& grid, int n,
                             const NetworkModel& model, const KernelFamily& kernel) {
  const int m = w.shape.radius();
  if (n < 0 || n >= m) fail(ErrorCode::invalid_argument, "truncation needs 0 <= n < m");
  const auto full = solve_driven(w, grid, m, model);
  const auto cut = solve_driven(w, grid, n, model);
  PathField diff(w.shape, w.time_points);
  for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] = full.values[i] - cut.values[i];
  TruncationGap out;
  out.n = n;
  out.gap = sorted_sum(diff.sup_norms());
  out.kappa_tail = kernel.kappa_tail(n);
  out.input_mass = sorted_sum(w.sup_norms());
  const double scale = out.kappa_tail * (static_cast<double>(w.shape.site_count()) + out.input_mass);
  if (scale > 0.0) {
    out.bound_ratio = out.gap / scale;
  } else {
    out.bound_ratio = out.gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return out;
}

std::vector<GrowthRow> growth_bound_check(const PathField& w, const TimeGrid& grid,
                                          std::span<const double> alphas,
                                          const NetworkModel& model, const KernelFamily& kernel) {
  const auto constants = model_constants(model.fhn, kernel, grid.horizon());
  const auto x = solve_driven(w, grid, w.shape.radius(), model);
  const double sites = static_cast<double>(w.shape.site_count());
  const double additive = constants.kappa_star + model.fhn.a_fr / model.fhn.c_fr;
  std::vector<GrowthRow> rows;
  for (double alpha : alphas) {
    const double raw = alpha / grid.dt();
    const auto step = static_cast<std::size_t>(std::llround(raw));
    if (std::abs(raw - static_cast<double>(step)) > 1e-9 || step > grid.steps()) {
      fail(ErrorCode::invalid_argument, "growth horizon is not a grid time");
    }
    GrowthRow row;
    row.alpha = alpha;
    row.lhs = sorted_sum(sup_per_site(x, step + 1));
    row.rhs = std::exp((constants.c + constants.kappa_star) * alpha) *
              (sites * (std::abs(model.fhn.u_ini) + alpha * additive) +
               2.0 * sorted_sum(sup_per_site(w, step + 1)));
    row.holds = row.lhs <= row.rhs;
    rows.push_back(row);
  }
  return rows;
}

EulerConvergence euler_self_convergence(const NetworkModel& model, const LatticeShape& shape,
                                        double horizon, double dt, int levels) {
  if (levels < 2) fail(ErrorCode::invalid_argument, "need at least two step sizes");
  EulerConvergence out;
  std::vector<std::vector<double>> terminal;
  for (int level = 0; level < levels; ++level) {
    const double h = dt / std::pow(2.0, level);
    const auto grid = TimeGrid::from_step(horizon, h);
    const PathField zero(shape, grid.points());
    const auto x = solve_driven(zero, grid, shape.radius(), model);
    const auto last = x.row(grid.steps());
    terminal.emplace_back(last.begin(), last.end());
    out.dts.push_back(h);
  }
  for (int level = 0; level + 1 < levels; ++level) {
    double diff = 0.0;
    for (std::size_t s = 0; s < terminal[level].size(); ++s) {
      diff = std::max(diff, std::abs(terminal[level][s] - terminal[level + 1][s]));
    }
    out.differences.push_back(diff);
  }
  for (std::size_t i = 0; i + 1 < out.differences.size(); ++i) {
    out.ratios.push_back(out.differences[i] / out.differences[i + 1]);
  }
  return out;
}

PathField brownian_drive(const LatticeShape& shape, const TimeGrid& grid, Engine& engine,
                         double scale) {
  std::normal_distribution<double> normal;
  PathField out(shape, grid.points());
  const double sd = scale * std::sqrt(grid.dt());
  for (std::size_t t = 1; t < grid.points(); ++t) {
    for (std::size_t s = 0; s < shape.site_count(); ++s) {
      out.at(t, s) = out.at(t - 1, s) + sd * normal(engine);
    }
  }
  return out;
}

}  // namespace lattice_ldp
