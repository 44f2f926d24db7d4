#include "lattice_ldp/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "lattice_ldp/error.hpp"
#include "lattice_ldp/fft.hpp"

namespace lattice_ldp {

namespace {

constexpr double kLambdaTailLimit = 1e-6;

double euclidean_norm(const LatticeIndex& k, int dim) {
  double s = 0.0;
  for (int p = 0; p < dim; ++p) s += static_cast<double>(k[p]) * k[p];
  return std::sqrt(s);
}

double family_value(const KappaSpec& spec, const LatticeIndex& k, int dim) {
  switch (spec.family) {
    case KappaFamily::geometric:
      return spec.scale * std::pow(spec.rate, l1_norm(k, dim));
    case KappaFamily::exponential:
      return spec.scale * std::pow(spec.rate, euclidean_norm(k, dim));
    case KappaFamily::table:
      break;
  }
  return 0.0;
}

// Mass of the untruncated family on each shell |k|_inf = r.
std::vector<double> shell_masses(const KappaSpec& spec, int dim, int max_radius) {
  std::vector<double> shells(static_cast<std::size_t>(max_radius) + 1, 0.0);
  const LatticeShape cube(dim, max_radius);
  for (std::size_t i = 0; i < cube.site_count(); ++i) {
    const auto k = cube.index(i);
    shells[static_cast<std::size_t>(sup_norm(k, dim))] += family_value(spec, k, dim);
  }
  return shells;
}

}  // namespace

KappaFamily parse_kappa_family(const std::string& name) {
  if (name == "geometric") return KappaFamily::geometric;
  if (name == "exponential") return KappaFamily::exponential;
  if (name == "table") return KappaFamily::table;
  fail(ErrorCode::invalid_argument, "unknown kappa family '" + name + "'");
}

std::string to_string(KappaFamily family) {
  switch (family) {
    case KappaFamily::geometric: return "geometric";
    case KappaFamily::exponential: return "exponential";
    case KappaFamily::table: return "table";
  }
  return "unknown";
}

int default_spectral_grid(int dim) {
  switch (dim) {
    case 1: return 4096;
    case 2: return 256;
    default: return 96;
  }
}

int default_kappa_support(int dim) {
  switch (dim) {
    case 1: return 40;
    case 2: return 12;
    default: return 4;
  }
}

int default_lambda_support(int dim) {
  switch (dim) {
    case 1: return 60;
    case 2: return 64;
    default: return 24;
  }
}

double KernelFamily::kappa(const LatticeIndex& k) const {
  if (!kappa_shape_.contains(k)) return 0.0;
  return kappa_[kappa_shape_.flat(k)];
}

double KernelFamily::lambda(const LatticeIndex& j) const {
  if (lambda_.empty() || !lambda_shape_.contains(j)) return 0.0;
  return lambda_[lambda_shape_.flat(j)];
}

double KernelFamily::kappa_tail(int n) const {
  if (n < 0) return kappa_total_;
  if (spec_.family == KappaFamily::geometric) {
    // total - inner = t * sum_i g^i (g - t)^{d-1-i}, with g the 1-d total and
    // t = 2 rho^{n+1} / (1 - rho) the 1-d tail; avoids cancellation.
    const double rho = spec_.rate;
    const double g = (1.0 + rho) / (1.0 - rho);
    const double t = 2.0 * std::pow(rho, n + 1) / (1.0 - rho);
    double acc = 0.0;
    for (int i = 0; i < dim_; ++i) acc += std::pow(g, i) * std::pow(g - t, dim_ - 1 - i);
    return spec_.scale * t * acc;
  }
  if (spec_.family == KappaFamily::exponential) {
    double tail = 0.0;
    for (std::size_t r = shells_.size(); r-- > static_cast<std::size_t>(n) + 1;) tail += shells_[r];
    return tail;
  }
  double tail = 0.0;
  for (std::size_t i = 0; i < kappa_.size(); ++i) {
    if (sup_norm(kappa_shape_.index(i), dim_) > n) tail += kappa_[i];
  }
  return tail;
}

KernelFamily build_kappa(int dim, const KappaSpec& spec) {
  if (spec.family == KappaFamily::table) {
    fail(ErrorCode::invalid_argument, "table families are built with kappa_from_table");
  }
  if (!(spec.rate > 0.0 && spec.rate < 1.0)) {
    fail(ErrorCode::invalid_argument, "kappa decay rate must lie in (0,1)");
  }
  if (!(spec.scale > 0.0)) fail(ErrorCode::invalid_argument, "kappa scale must be positive");
  if (spec.support < 1) fail(ErrorCode::invalid_argument, "kappa support must be >= 1");

  KernelFamily family;
  family.dim_ = dim;
  family.spec_ = spec;
  family.kappa_shape_ = LatticeShape(dim, spec.support);
  family.kappa_.resize(family.kappa_shape_.site_count());
  // Sum smallest terms first.
  std::vector<double> sorted;
  sorted.reserve(family.kappa_.size());
  for (std::size_t i = 0; i < family.kappa_.size(); ++i) {
    family.kappa_[i] = family_value(spec, family.kappa_shape_.index(i), dim);
    sorted.push_back(family.kappa_[i]);
  }
  std::sort(sorted.begin(), sorted.end());
  double star = 0.0;
  for (double v : sorted) star += v;
  family.kappa_star_ = star;
  if (spec.family == KappaFamily::geometric) {
    family.kappa_total_ = spec.scale * std::pow((1.0 + spec.rate) / (1.0 - spec.rate), dim);
  } else {
    // Shells beyond this radius carry less than 1e-18 of the mass.
    const int max_radius = std::max(
        spec.support, static_cast<int>(std::ceil(std::log(1e-18) / std::log(spec.rate))) + 1);
    family.shells_ = shell_masses(spec, dim, max_radius);
    family.kappa_total_ = star + family.kappa_tail(spec.support);
  }
  return family;
}

KernelFamily kappa_from_table(int dim, const std::vector<std::pair<LatticeIndex, double>>& entries) {
  if (entries.empty()) fail(ErrorCode::invalid_argument, "kappa table is empty");
  int radius = 0;
  for (const auto& [k, v] : entries) {
    for (int p = dim; p < 3; ++p) {
      if (k[p] != 0) fail(ErrorCode::invalid_argument, "kappa offset has too many coordinates");
    }
    radius = std::max(radius, sup_norm(k, dim));
  }
  KernelFamily family;
  family.dim_ = dim;
  family.spec_.family = KappaFamily::table;
  family.spec_.support = radius;
  family.spec_.rate = 0.0;
  family.spec_.scale = 0.0;
  family.kappa_shape_ = LatticeShape(dim, radius);
  family.kappa_.assign(family.kappa_shape_.site_count(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& [k, v] : entries) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::invalid_argument, "kappa must be positive at " + format_index(k, dim));
    }
    family.kappa_[family.kappa_shape_.flat(k)] = v;
  }
  for (std::size_t i = 0; i < family.kappa_.size(); ++i) {
    const auto k = family.kappa_shape_.index(i);
    if (std::isnan(family.kappa_[i])) {
      fail(ErrorCode::invalid_argument, "kappa table misses offset " + format_index(k, dim));
    }
    // Symmetry under each single coordinate sign flip generates the full group.
    for (int p = 0; p < dim; ++p) {
      auto flipped = k;
      flipped[p] = -flipped[p];
      if (family.kappa_[family.kappa_shape_.flat(flipped)] != family.kappa_[i]) {
        fail(ErrorCode::invalid_argument,
             "kappa table is not symmetric at " + format_index(k, dim));
      }
    }
  }
  std::vector<double> sorted = family.kappa_;
  std::sort(sorted.begin(), sorted.end());
  double star = 0.0;
  for (double v : sorted) star += v;
  family.kappa_star_ = star;
  family.kappa_total_ = star;
  return family;
}

KernelFamily build_lambda(const KernelFamily& family, int grid, int lambda_support) {
  const int dim = family.dim();
  if (lambda_support < family.support()) {
    fail(ErrorCode::invalid_argument, "lambda support must be at least the kappa support");
  }
  if (grid < 4 * lambda_support) {
    fail(ErrorCode::invalid_argument, "spectral grid must satisfy M >= 4 R_lambda");
  }
  if (grid <= 2 * family.support()) {
    fail(ErrorCode::invalid_argument, "spectral grid too small for kappa support");
  }

  FftGrid fft(std::vector<int>(static_cast<std::size_t>(dim), grid));
  auto buf = fft.buffer();
  const auto slot = [&](const LatticeIndex& j) {
    std::size_t s = 0;
    for (int p = 0; p < dim; ++p) {
      int r = j[p] % grid;
      if (r < 0) r += grid;
      s = s * static_cast<std::size_t>(grid) + static_cast<std::size_t>(r);
    }
    return s;
  };

  for (auto& z : buf) z = 0.0;
  const auto& kshape = family.kappa_shape();
  for (std::size_t i = 0; i < kshape.site_count(); ++i) {
    buf[slot(kshape.index(i))] = family.kappa_values()[i];
  }
  fft.forward();  // kappa~ on the grid; real because kappa is even

  const double kstar = family.kappa_star();
  const double h = kstar;
  std::vector<double> denom(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    denom[i] = 2.0 * kstar - buf[i].real();
    if (!(denom[i] > 0.0)) {
      fail(ErrorCode::invalid_argument, "2 kappa_* - kappa~ is not positive on the grid");
    }
    buf[i] = h / denom[i];
  }
  fft.backward();
  const double norm = 1.0 / static_cast<double>(buf.size());
  std::vector<double> lam(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) lam[i] = buf[i].real() * norm;

  // Iterative refinement. The residual h[x=0] - (2 kappa_* lam - kappa * lam) is
  // formed in real space, where every term is local and positive, so small
  // entries far from the origin keep their relative accuracy; the correction
  // is solved spectrally.
  std::vector<std::pair<std::array<int, 3>, double>> taps;
  for (std::size_t i = 0; i < kshape.site_count(); ++i) {
    const auto k = kshape.index(i);
    taps.push_back({{k[0], k[1], k[2]}, family.kappa_values()[i]});
  }
  const std::array<int, 3> extent{grid, dim > 1 ? grid : 1, dim > 2 ? grid : 1};
  const auto wrap = [&](int v, int p) {
    v %= extent[p];
    return v < 0 ? v + extent[p] : v;
  };
  for (int pass = 0; pass < 2; ++pass) {
    for (int x0 = 0; x0 < extent[0]; ++x0) {
      for (int x1 = 0; x1 < extent[1]; ++x1) {
        for (int x2 = 0; x2 < extent[2]; ++x2) {
          const std::size_t at =
              (static_cast<std::size_t>(x0) * extent[1] + x1) * extent[2] + x2;
          double conv = 0.0;
          for (const auto& [k, v] : taps) {
            const std::size_t src =
                (static_cast<std::size_t>(wrap(x0 - k[0], 0)) * extent[1] + wrap(x1 - k[1], 1)) *
                    extent[2] +
                wrap(x2 - k[2], 2);
            conv += v * lam[src];
          }
          const double rhs = at == 0 ? h : 0.0;
          buf[at] = rhs - 2.0 * kstar * lam[at] + conv;
        }
      }
    }
    fft.forward();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] /= denom[i];
    fft.backward();
    for (std::size_t i = 0; i < buf.size(); ++i) lam[i] += buf[i].real() * norm;
  }

  double grid_total = 0.0;
  for (double v : lam) grid_total += v;

  KernelFamily out = family;
  out.spectral_grid_ = grid;
  out.lambda_shape_ = LatticeShape(dim, lambda_support);
  out.lambda_.resize(out.lambda_shape_.site_count());
  for (std::size_t i = 0; i < out.lambda_.size(); ++i) {
    const auto j = out.lambda_shape_.index(i);
    const double value = lam[slot(j)];
    if (!(value > 0.0)) {
      fail(ErrorCode::invalid_argument,
           "computed lambda is not positive at " + format_index(j, dim) +
               " (spectral resolution exhausted; reduce R_lambda or raise M)");
    }
    out.lambda_[i] = value;
  }
  // The exact symbol is even in every coordinate; average out FFT round-off so
  // lambda^j = lambda^k whenever |j(p)| = |k(p)| for all p.
  {
    std::vector<double> symmetric(out.lambda_.size());
    for (std::size_t i = 0; i < symmetric.size(); ++i) {
      const auto j = out.lambda_shape_.index(i);
      double acc = 0.0;
      for (int mask = 0; mask < (1 << dim); ++mask) {
        auto flipped = j;
        for (int p = 0; p < dim; ++p) {
          if (mask & (1 << p)) flipped[p] = -flipped[p];
        }
        acc += out.lambda_[out.lambda_shape_.flat(flipped)];
      }
      symmetric[i] = acc / static_cast<double>(1 << dim);
    }
    out.lambda_ = std::move(symmetric);
  }
  std::vector<double> sorted = out.lambda_;
  std::sort(sorted.begin(), sorted.end());
  double stored = 0.0;
  for (double v : sorted) stored += v;
  out.lambda_tail_mass_ = std::max(0.0, grid_total - stored);
  if (out.lambda_tail_mass_ > kLambdaTailLimit) {
    std::ostringstream msg;
    msg << "lambda tail mass beyond R_lambda is " << out.lambda_tail_mass_ << " (> 1e-6)";
    fail(ErrorCode::invalid_argument, msg.str());
  }
  for (auto& v : out.lambda_) v /= stored;
  return out;
}

std::vector<double> KernelFamily::periodic_weights(const LatticeShape& torus) const {
  if (lambda_.empty()) fail(ErrorCode::invalid_argument, "lambda has not been built");
  if (torus.dim() != dim_) fail(ErrorCode::invalid_argument, "dimension mismatch");
  std::vector<double> omega(torus.site_count(), 0.0);
  for (std::size_t i = 0; i < lambda_.size(); ++i) {
    omega[torus.flat(mod_torus(lambda_shape_.index(i), torus))] += lambda_[i];
  }
  return omega;
}

DominationReport check_domination(const KernelFamily& family) {
  if (!family.has_lambda()) fail(ErrorCode::invalid_argument, "lambda has not been built");
  DominationReport report;
  const int dim = family.dim();
  const double kstar = family.kappa_star();

  std::vector<double> sorted(family.lambda_values().begin(), family.lambda_values().end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  report.normalization_error = std::abs(total - 1.0);
  report.min_lambda = sorted.front();

  const int interior = family.lambda_support() - family.support();
  if (interior < 0) return report;
  const LatticeShape inner(dim, interior);
  const auto& kshape = family.kappa_shape();
  report.max_violation = -std::numeric_limits<double>::infinity();
  report.interior_sites = inner.site_count();
  for (std::size_t i = 0; i < inner.site_count(); ++i) {
    const auto j = inner.index(i);
    double conv = 0.0;
    for (std::size_t q = 0; q < kshape.site_count(); ++q) {
      const auto k = kshape.index(q);
      conv += family.lambda(j - k) * family.kappa_values()[q];
    }
    const double lam = family.lambda(j);
    const double gap = conv - 2.0 * kstar * lam;
    const double relative = gap / lam;
    if (relative > report.max_violation) {
      report.max_violation = relative;
      report.worst = j;
    }
    if (l1_norm(j, dim) == 0) report.origin_gap = -gap;
  }
  return report;
}

double weighted_norm(std::span<const double> sup_norms, std::span<const double> periodic_weights) {
  if (sup_norms.size() != periodic_weights.size()) {
    fail(ErrorCode::invalid_argument, "weight and field sizes differ");
  }
  double acc = 0.0;
  for (std::size_t s = 0; s < sup_norms.size(); ++s) {
    acc += periodic_weights[s] * sup_norms[s] * sup_norms[s];
  }
  return std::sqrt(acc);
}

double weighted_norm(const PathField& field, const KernelFamily& family) {
  const auto omega = family.periodic_weights(field.shape);
  const auto sup = field.sup_norms();
  return weighted_norm(sup, omega);
}

void write_kernel_csv(std::ostream& out, const KernelFamily& family) {
  const auto old_precision = out.precision(17);
  out << "component,offset,value\n";
  const auto emit = [&](const char* name, const LatticeShape& shape, std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto k = shape.index(i);
      out << name << ',';
      for (int p = 0; p < family.dim(); ++p) out << (p ? " " : "") << k[p];
      out << ',' << v[i] << '\n';
    }
  };
  emit("kappa", family.kappa_shape(), family.kappa_values());
  if (family.has_lambda()) emit("lambda", family.lambda_shape(), family.lambda_values());
  out.precision(old_precision);
}

KernelFamily read_kernel_csv(std::istream& in, int dim) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("component,offset,value", 0) != 0) {
    fail(ErrorCode::io_failure, "kernel CSV header missing");
  }
  std::vector<std::pair<LatticeIndex, double>> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string component, offset, value;
    if (!std::getline(row, component, ',') || !std::getline(row, offset, ',') ||
        !std::getline(row, value)) {
      fail(ErrorCode::io_failure, "malformed kernel CSV line " + std::to_string(line_no));
    }
    if (component != "kappa") continue;
    LatticeIndex k{0, 0, 0};
    std::istringstream coords(offset);
    for (int p = 0; p < dim; ++p) {
      if (!(coords >> k[p])) {
        fail(ErrorCode::io_failure, "bad offset on kernel CSV line " + std::to_string(line_no));
      }
    }
    entries.emplace_back(k, std::stod(value));
  }
  return kappa_from_table(dim, entries);
}

}  // namespace lattice_ldp
