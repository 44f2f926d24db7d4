#include "lattice_ldp/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lattice_ldp/error.hpp"

namespace lattice_ldp {

namespace {

constexpr double kSpectrumTolerance = 1e-12;

int default_limit_grid(int dim) {
  switch (dim) {
    case 1: return 1024;
    case 2: return 128;
    default: return 32;
  }
}

void validate(const CovarianceSpec& spec) {
  if (!std::isfinite(spec.sigma2) || spec.sigma2 < 0.0) {
    fail(ErrorCode::invalid_argument, "noise sigma2 must be finite and >= 0");
  }
  if (!std::isfinite(spec.rho) || spec.rho < 0.0) {
    fail(ErrorCode::invalid_argument, "noise rho must be finite and >= 0");
  }
  if (spec.family == CovarianceFamily::geometric && spec.rho >= 1.0) {
    fail(ErrorCode::invalid_argument, "geometric noise needs rho < 1 for summable covariance");
  }
}

// c^j(t) on V_radius from the continuous spectrum, trapezoid rule on an M^d grid.
std::vector<double> limit_filter(const CovarianceSpec& spec, int dim, int grid_size, double t,
                                 const LatticeShape& out_shape) {
  FftGrid fft(std::vector<int>(dim, grid_size));
  auto buf = fft.buffer();
  const double step = 2.0 * std::numbers::pi / grid_size;
  std::vector<double> theta(dim);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    std::size_t rest = i;
    for (int p = dim - 1; p >= 0; --p) {
      theta[p] = step * static_cast<double>(rest % grid_size);
      rest /= grid_size;
    }
    const double value = spec.spectrum(theta, t);
    if (value < -kSpectrumTolerance) {
      std::ostringstream msg;
      msg << "continuous noise spectrum is negative (" << value << ") at t=" << t;
      fail(ErrorCode::negative_spectrum, msg.str());
    }
    buf[i] = std::sqrt(std::max(value, 0.0));
  }
  fft.backward();
  const double norm = std::pow(static_cast<double>(grid_size), dim);
  std::vector<double> out(out_shape.site_count());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const auto j = out_shape.index(s);
    std::size_t slot = 0;
    for (int p = 0; p < dim; ++p) {
      const int r = ((j[p] % grid_size) + grid_size) % grid_size;
      slot = slot * grid_size + static_cast<std::size_t>(r);
    }
    out[s] = buf[slot].real() / norm;
  }
  return out;
}

std::vector<std::size_t> eta_sample_steps(const TimeGrid& grid, std::size_t samples) {
  const std::size_t k = grid.steps();
  samples = std::clamp<std::size_t>(samples, 2, k + 1);
  std::vector<std::size_t> steps;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto s = static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * static_cast<double>(k) / double(samples - 1)));
    if (steps.empty() || steps.back() != s) steps.push_back(s);
  }
  return steps;
}

}  // namespace

CovarianceFamily parse_covariance_family(const std::string& name) {
  if (name == "site_white") return CovarianceFamily::site_white;
  if (name == "geometric") return CovarianceFamily::geometric;
  if (name == "nearest_neighbor") return CovarianceFamily::nearest_neighbor;
  fail(ErrorCode::invalid_argument, "unknown noise family '" + name + "'");
}

std::string to_string(CovarianceFamily family) {
  switch (family) {
    case CovarianceFamily::site_white: return "site_white";
    case CovarianceFamily::geometric: return "geometric";
    case CovarianceFamily::nearest_neighbor: return "nearest_neighbor";
  }
  return "?";
}

TimeProfile parse_time_profile(const std::string& name) {
  if (name == "constant") return TimeProfile::constant;
  if (name == "ramp") return TimeProfile::ramp;
  fail(ErrorCode::invalid_argument, "unknown noise time profile '" + name + "'");
}

std::string to_string(TimeProfile profile) {
  return profile == TimeProfile::constant ? "constant" : "ramp";
}

double CovarianceSpec::time_factor(double t) const {
  return profile == TimeProfile::constant ? 1.0 : 1.0 + t;
}

double CovarianceSpec::rate(const LatticeIndex& j, int dim, double t) const {
  const double base = sigma2 * time_factor(t);
  const int l1 = l1_norm(j, dim);
  switch (family) {
    case CovarianceFamily::site_white: return l1 == 0 ? base : 0.0;
    case CovarianceFamily::geometric: return base * std::pow(rho, l1);
    case CovarianceFamily::nearest_neighbor:
      if (l1 == 0) return base;
      return l1 == 1 ? base * rho : 0.0;
  }
  return 0.0;
}

double CovarianceSpec::spectrum(std::span<const double> theta, double t) const {
  const double base = sigma2 * time_factor(t);
  switch (family) {
    case CovarianceFamily::site_white: return base;
    case CovarianceFamily::geometric: {
      double value = base;
      for (double th : theta) value *= (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(th) + rho * rho);
      return value;
    }
    case CovarianceFamily::nearest_neighbor: {
      double sum = 1.0;
      for (double th : theta) sum += 2.0 * rho * std::cos(th);
      return base * sum;
    }
  }
  return 0.0;
}

std::span<const double> SpectralNoiseModel::spectrum(std::size_t step) const {
  return spectrum_.at(slice(step));
}

std::span<const double> SpectralNoiseModel::sqrt_spectrum(std::size_t step) const {
  return sqrt_spectrum_.at(slice(step));
}

std::vector<double> SpectralNoiseModel::filter(std::size_t step) const {
  TorusDft dft(shape_);
  const auto root = sqrt_spectrum(step);
  std::vector<Complex> in(root.begin(), root.end());
  const auto out = dft.inverse(in);
  std::vector<double> c(out.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = out[i].real();
  // c^{n,k} = c^{n,-k}; average out the roundoff asymmetry
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::size_t mirror = shape_.flat(-shape_.index(i));
    if (mirror > i) c[i] = c[mirror] = 0.5 * (c[i] + c[mirror]);
  }
  return c;
}

double SpectralNoiseModel::eta(const LatticeIndex& j) const {
  if (!eta_shape_.contains(j)) return 0.0;
  return eta_[eta_shape_.flat(j)];
}

SpectralNoiseModel build_spectral_model(const CovarianceSpec& spec, const LatticeShape& shape,
                                        const TimeGrid& grid, const SpectralOptions& options) {
  validate(spec);
  SpectralNoiseModel model;
  model.shape_ = shape;
  model.grid_ = grid;
  model.spec_ = spec;

  const int dim = shape.dim();
  const auto sites = cube_indices(shape);
  TorusDft dft(shape);
  const std::size_t slices = spec.time_constant() ? 1 : grid.points();
  std::vector<double> field(sites.size());
  for (std::size_t s = 0; s < slices; ++s) {
    const double t = grid.time(s);
    for (std::size_t i = 0; i < sites.size(); ++i) field[i] = spec.rate(sites[i], dim, t);
    const auto transformed = dft.forward_real(field);
    std::vector<double> values(sites.size()), roots(sites.size());
    for (std::size_t k = 0; k < sites.size(); ++k) {
      // real by the sign-flip symmetry of a; take the symmetric part exactly
      const std::size_t mirror = shape.flat(-sites[k]);
      const double v = 0.5 * (transformed[k].real() + transformed[mirror].real());
      if (v < -kSpectrumTolerance) {
        std::ostringstream msg;
        msg << "a~^{n,k}(t) = " << v << " at k=" << format_index(sites[k], dim) << ", t=" << t;
        fail(ErrorCode::negative_spectrum, msg.str());
      }
      values[k] = std::max(v, 0.0);
      roots[k] = std::sqrt(values[k]);
      model.a_max_ = std::max(model.a_max_, values[k]);
    }
    model.spectrum_.push_back(std::move(values));
    model.sqrt_spectrum_.push_back(std::move(roots));
  }

  // Limit filters and discrepancies eta_{n,j} = ||c^{n,j} - c^j||_T + T ||d/dt (c^{n,j} - c^j)||_T
  int m = options.limit_grid > 0 ? options.limit_grid : default_limit_grid(dim);
  m = std::max(m, 4 * (shape.radius() + 1));
  model.limit_grid_ = m;
  model.eta_shape_ = LatticeShape(dim, m / 4);
  const auto& eta_shape = model.eta_shape_;

  model.limit_filter_ = limit_filter(spec, dim, m, 0.0, eta_shape);
  const auto fine = limit_filter(spec, dim, 2 * m, 0.0, eta_shape);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    model.richardson_error_ =
        std::max(model.richardson_error_, std::abs(fine[i] - model.limit_filter_[i]));
  }

  const auto steps = spec.time_constant() ? std::vector<std::size_t>{0}
                                          : eta_sample_steps(grid, options.eta_time_samples);
  std::vector<std::vector<double>> gap(steps.size());  // [sample][eta site]
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double t = grid.time(steps[i]);
    auto limit = i == 0 ? model.limit_filter_ : limit_filter(spec, dim, m, t, eta_shape);
    const auto torus = model.filter(steps[i]);
    for (std::size_t s = 0; s < limit.size(); ++s) {
      const auto j = eta_shape.index(s);
      const double cn = shape.contains(j) ? torus[shape.flat(j)] : 0.0;
      limit[s] = cn - limit[s];
    }
    gap[i] = std::move(limit);
  }

  model.eta_.assign(eta_shape.site_count(), 0.0);
  for (std::size_t s = 0; s < eta_shape.site_count(); ++s) {
    double sup = 0.0, sup_derivative = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      sup = std::max(sup, std::abs(gap[i][s]));
      if (steps.size() < 2) continue;
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = i + 1 == steps.size() ? i : i + 1;
      const double dt = grid.time(steps[hi]) - grid.time(steps[lo]);
      sup_derivative = std::max(sup_derivative, std::abs(gap[hi][s] - gap[lo][s]) / dt);
    }
    model.eta_[s] = sup + grid.horizon() * sup_derivative;
  }
  auto sorted = model.eta_;
  std::sort(sorted.begin(), sorted.end());
  for (double v : sorted) model.eta_star_ += v;
  return model;
}

NoiseSynthesizer::NoiseSynthesizer(const SpectralNoiseModel& model)
    : model_(&model), dft_(model.shape()), white_(model.shape().site_count()) {
  white_fast_path_ = model.spec().family == CovarianceFamily::site_white;
}

void NoiseSynthesizer::increment(std::size_t step, Engine& engine, std::span<double> out) {
  const double scale = std::sqrt(model_->grid().dt());
  for (auto& w : white_) w = scale * normal_(engine);
  if (white_fast_path_) {
    const double amplitude = std::sqrt(model_->spec().sigma2 *
                                       model_->spec().time_factor(model_->grid().time(step)));
    for (std::size_t i = 0; i < white_.size(); ++i) out[i] = amplitude * white_[i];
    return;
  }
  dft_.filter_real(white_, model_->sqrt_spectrum(step), out);
}

double NoiseSynthesizer::tilted_increment(std::size_t step, Engine& engine, std::span<double> out,
                                          double drift) {
  const double dt = model_->grid().dt();
  const double scale = std::sqrt(dt);
  double sum = 0.0;
  for (auto& w : white_) {
    w = scale * normal_(engine) + drift * dt;
    sum += w;
  }
  if (white_fast_path_) {
    const double amplitude = std::sqrt(model_->spec().sigma2 *
                                       model_->spec().time_factor(model_->grid().time(step)));
    for (std::size_t i = 0; i < white_.size(); ++i) out[i] = amplitude * white_[i];
  } else {
    dft_.filter_real(white_, model_->sqrt_spectrum(step), out);
  }
  return sum;
}

std::vector<std::size_t> record_schedule(const TimeGrid& grid, std::size_t every) {
  if (every == 0) fail(ErrorCode::invalid_argument, "record_every must be >= 1");
  std::vector<std::size_t> steps;
  for (std::size_t s = 0; s <= grid.steps(); s += every) steps.push_back(s);
  if (steps.back() != grid.steps()) steps.push_back(grid.steps());
  return steps;
}

std::size_t NoiseEnsemble::recorded_position(std::size_t step) const {
  const auto it = std::lower_bound(recorded_steps.begin(), recorded_steps.end(), step);
  if (it == recorded_steps.end() || *it != step) {
    fail(ErrorCode::invalid_argument, "step " + std::to_string(step) + " was not recorded");
  }
  return static_cast<std::size_t>(it - recorded_steps.begin());
}

NoiseEnsemble sample_noise_paths(const SpectralNoiseModel& model, std::size_t replicas,
                                 std::uint64_t seed, const SamplingOptions& options) {
  NoiseEnsemble ensemble;
  ensemble.shape = model.shape();
  ensemble.grid = model.grid();
  ensemble.seed = seed;
  ensemble.recorded_steps = record_schedule(model.grid(), options.record_every);
  ensemble.paths.resize(replicas);
  ensemble.sup_norms.resize(replicas);

  const unsigned workers = std::max(1u, options.workers);
  std::vector<NoiseSynthesizer> synth;
  synth.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) synth.emplace_back(model);

  const std::size_t sites = model.shape().site_count();
  parallel_for(replicas, workers, [&](std::size_t r, unsigned worker) {
    Engine engine = replica_engine(seed, r);
    PathField path(model.shape(), ensemble.recorded_steps.size());
    std::vector<double> state(sites, 0.0), delta(sites), sup(sites, 0.0);
    std::size_t next = 1;
    for (std::size_t step = 0; step < model.grid().steps(); ++step) {
      synth[worker].increment(step, engine, delta);
      for (std::size_t i = 0; i < sites; ++i) {
        state[i] += delta[i];
        sup[i] = std::max(sup[i], std::abs(state[i]));
      }
      if (next < ensemble.recorded_steps.size() && ensemble.recorded_steps[next] == step + 1) {
        std::copy(state.begin(), state.end(), path.row(next).begin());
        ++next;
      }
    }
    ensemble.paths[r] = std::move(path);
    ensemble.sup_norms[r] = std::move(sup);
  });
  return ensemble;
}

double covariance_integral(const SpectralNoiseModel& model, const LatticeIndex& offset, double s,
                           double t) {
  const auto& grid = model.grid();
  const double upper = std::min(s, t);
  const auto steps = static_cast<std::size_t>(std::llround(upper / grid.dt()));
  const auto j = mod_torus(offset, model.shape());
  const int dim = model.shape().dim();
  double total = 0.0;
  for (std::size_t m = 0; m < steps; ++m) {
    total += 0.5 * grid.dt() *
             (model.spec().rate(j, dim, grid.time(m)) + model.spec().rate(j, dim, grid.time(m + 1)));
  }
  return total;
}

CovarianceReport verify_covariance(const NoiseEnsemble& ensemble, const SpectralNoiseModel& model,
                                   std::span<const std::pair<LatticeIndex, LatticeIndex>> site_pairs,
                                   std::span<const std::pair<double, double>> time_pairs) {
  if (ensemble.replica_count() < 2) {
    fail(ErrorCode::invalid_argument, "covariance check needs at least two replicas");
  }
  const auto& grid = ensemble.grid;
  auto position = [&](double time) {
    const double raw = time / grid.dt();
    const auto step = static_cast<std::size_t>(std::llround(raw));
    if (std::abs(raw - static_cast<double>(step)) > 1e-9 || step > grid.steps()) {
      fail(ErrorCode::invalid_argument, "time is not on the grid");
    }
    return ensemble.recorded_position(step);
  };

  CovarianceReport report;
  const double count = static_cast<double>(ensemble.replica_count());
  for (const auto& [first, second] : site_pairs) {
    const std::size_t a = ensemble.shape.flat(first), b = ensemble.shape.flat(second);
    for (const auto& [s, t] : time_pairs) {
      const std::size_t ps = position(s), pt = position(t);
      double mean = 0.0, m2 = 0.0;
      std::size_t seen = 0;
      for (const auto& path : ensemble.paths) {
        const double x = path.at(ps, a) * path.at(pt, b);
        ++seen;
        const double d = x - mean;
        mean += d / static_cast<double>(seen);
        m2 += d * (x - mean);
      }
      CovarianceEntry entry;
      entry.first = first;
      entry.second = second;
      entry.s = s;
      entry.t = t;
      entry.empirical = mean;
      entry.expected = covariance_integral(model, second - first, s, t);
      entry.standard_error = std::sqrt(m2 / (count - 1.0) / count);
      const double dev = entry.empirical - entry.expected;
      if (entry.standard_error > 0.0) {
        entry.z = dev / entry.standard_error;
      } else {
        entry.z = std::abs(dev) <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
      }
      report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(dev));
      report.max_abs_z = std::max(report.max_abs_z, std::abs(entry.z));
      report.entries.push_back(entry);
    }
  }
  return report;
}

std::vector<TailEstimate> tail_statistic(const NoiseEnsemble& ensemble,
                                         std::span<const double> a_values) {
  if (ensemble.replica_count() == 0) fail(ErrorCode::invalid_argument, "empty ensemble");
  const double sites = static_cast<double>(ensemble.shape.site_count());
  std::vector<double> totals;
  totals.reserve(ensemble.replica_count());
  for (const auto& sup : ensemble.sup_norms) {
    auto sorted = sup;
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double v : sorted) total += v;
    totals.push_back(total);
  }
  std::vector<TailEstimate> out;
  for (double a : a_values) {
    TailEstimate row;
    row.a = a;
    row.hits = static_cast<std::size_t>(
        std::count_if(totals.begin(), totals.end(), [&](double x) { return x > a * sites; }));
    row.probability = static_cast<double>(row.hits) / static_cast<double>(totals.size());
    row.log_probability_per_site = row.hits == 0 ? -std::numeric_limits<double>::infinity()
                                                 : std::log(row.probability) / sites;
    out.push_back(row);
  }
  return out;
}

TiltedTailEstimate tilted_tail_estimate(const SpectralNoiseModel& model, double a,
                                        std::size_t replicas, std::uint64_t seed, double drift,
                                        unsigned workers) {
  if (replicas < 2) fail(ErrorCode::invalid_argument, "need at least two replicas");
  const auto& shape = model.shape();
  const std::size_t sites = shape.site_count();
  const double horizon = model.grid().horizon();
  if (drift < 0.0) {
    const double gain = model.sqrt_spectrum(0)[shape.flat({0, 0, 0})];
    drift = gain > 0.0 ? std::max(0.0, a) / (gain * horizon) : 0.0;
  }
  const double log_shift = 0.5 * drift * drift * horizon * static_cast<double>(sites);

  const unsigned pool = std::max(1u, workers);
  std::vector<NoiseSynthesizer> synth;
  synth.reserve(pool);
  for (unsigned w = 0; w < pool; ++w) synth.emplace_back(model);
  std::vector<double> weights(replicas, 0.0);
  parallel_for(replicas, pool, [&](std::size_t r, unsigned worker) {
    Engine engine = replica_engine(seed, r);
    // the sign of the drift is drawn per replica: an equal mixture of +theta and -theta
    const double signed_drift = std::bernoulli_distribution(0.5)(engine) ? drift : -drift;
    std::vector<double> state(sites, 0.0), delta(sites), sup(sites, 0.0);
    double white_total = 0.0;
    for (std::size_t step = 0; step < model.grid().steps(); ++step) {
      white_total += synth[worker].tilted_increment(step, engine, delta, signed_drift);
      for (std::size_t i = 0; i < sites; ++i) {
        state[i] += delta[i];
        sup[i] = std::max(sup[i], std::abs(state[i]));
      }
    }
    std::sort(sup.begin(), sup.end());
    double total = 0.0;
    for (double v : sup) total += v;
    if (total > a * static_cast<double>(sites)) {
      weights[r] = std::exp(log_shift) / std::cosh(drift * white_total);
    }
  });

  TiltedTailEstimate est;
  est.a = a;
  est.drift = drift;
  const double count = static_cast<double>(replicas);
  double sum = 0.0;
  for (double w : weights) {
    if (w > 0.0) ++est.hits;
    sum += w;
  }
  est.probability = sum / count;
  double sq = 0.0;
  for (double w : weights) sq += (w - est.probability) * (w - est.probability);
  est.standard_error = std::sqrt(sq / (count - 1.0) / count);
  est.log_probability_per_site = est.hits == 0 ? -std::numeric_limits<double>::infinity()
                                               : std::log(est.probability) / static_cast<double>(sites);
  return est;
}

double reflection_bound(double b, double horizon) {
  if (horizon <= 0.0) fail(ErrorCode::invalid_argument, "horizon must be positive");
  return 2.0 * std::erfc(b / std::sqrt(2.0 * horizon));
}

std::vector<SupTailRow> brownian_sup_tail_check(std::size_t replicas, double horizon,
                                                std::size_t steps, std::span<const double> b_values,
                                                std::uint64_t seed, unsigned workers) {
  if (replicas == 0 || steps == 0) {
    fail(ErrorCode::invalid_argument, "need at least one replica and one step");
  }
  for (double b : b_values) {
    if (!(b >= 0.0)) fail(ErrorCode::invalid_argument, "tail levels must be nonnegative");
  }
  const double scale = std::sqrt(horizon / static_cast<double>(steps));
  std::vector<double> sups(replicas);
  parallel_for(replicas, workers, [&](std::size_t r, unsigned) {
    Engine engine = replica_engine(seed, r);
    std::normal_distribution<double> normal;
    double x = 0.0, sup = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      x += scale * normal(engine);
      sup = std::max(sup, std::abs(x));
    }
    sups[r] = sup;
  });

  std::vector<SupTailRow> rows;
  const double count = static_cast<double>(replicas);
  for (double b : b_values) {
    SupTailRow row;
    row.b = b;
    const auto hits = std::count_if(sups.begin(), sups.end(), [&](double s) { return s >= b; });
    row.empirical = static_cast<double>(hits) / count;
    row.bound = reflection_bound(b, horizon);
    row.standard_error = std::sqrt(row.empirical * (1.0 - row.empirical) / count);
    row.within = row.empirical <= row.bound + 4.0 * std::max(row.standard_error, 1.0 / count);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lattice_ldp
