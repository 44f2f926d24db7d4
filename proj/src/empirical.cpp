#include "lattice_ldp/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "lattice_ldp/error.hpp"
#include "lattice_ldp/parallel.hpp"
#include "lattice_ldp/path_io.hpp"

namespace lattice_ldp {

namespace {

double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

double quantile7(const std::vector<double>& sorted, double level) {
  if (sorted.size() == 1) return sorted.front();
  const double h = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_time(const EmpiricalMeasure& measure, std::size_t time) {
  if (time >= measure.base().time_points) {
    fail(ErrorCode::invalid_argument, "time position outside the recorded field");
  }
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(PathField base)
    : EmpiricalMeasure(std::make_shared<const PathField>(std::move(base))) {}

EmpiricalMeasure::EmpiricalMeasure(std::shared_ptr<const PathField> base)
    : base_(std::move(base)), shifts_(cube_indices(base_->shape)) {
  if (base_->values.size() != base_->shape.site_count() * base_->time_points) {
    fail(ErrorCode::invalid_argument, "empirical measure needs a complete field over V_n");
  }
}

double EmpiricalMeasure::value(std::size_t atom, const LatticeIndex& k, std::size_t time) const {
  const auto site = mod_torus(k + shifts_[atom], shape());
  return base_->at(time, shape().flat(site));
}

PathField EmpiricalMeasure::atom(std::size_t a) const { return base_->shifted(shifts_[a]); }

EmpiricalMeasure empirical_measure(PathField field) { return EmpiricalMeasure(std::move(field)); }

bool stationarity_check(const EmpiricalMeasure& measure, std::span<const LatticeIndex> shifts) {
  const auto& shape = measure.shape();
  const std::size_t n = measure.atom_count();
  for (const auto& s : shifts) {
    // S^s maps atom S^j X to S^{(j+s) mod V_n} X; check as permutations of sites
    // and that the image of the atom set is the atom set.
    const auto outer = shift_permutation(shape, s);
    std::vector<char> hit(n, 0);
    for (std::size_t a = 0; a < n; ++a) {
      const auto target = mod_torus(measure.shift(a) + s, shape);
      const auto inner = shift_permutation(shape, measure.shift(a));
      const auto composed = shift_permutation(shape, target);
      for (std::size_t m = 0; m < shape.site_count(); ++m) {
        if (inner[outer[m]] != composed[m]) return false;
      }
      const std::size_t idx = shape.flat(target);
      if (hit[idx]) return false;
      hit[idx] = 1;
    }
    if (std::find(hit.begin(), hit.end(), 0) != hit.end()) return false;
  }
  return true;
}

std::vector<MarginalRow> marginal_statistics(const EmpiricalMeasure& measure,
                                             std::span<const LatticeIndex> offsets,
                                             std::span<const std::size_t> times,
                                             std::span<const double> levels) {
  for (double q : levels) {
    if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::invalid_argument, "quantile level outside [0, 1]");
  }
  std::vector<MarginalRow> rows;
  const double count = static_cast<double>(measure.atom_count());
  for (const auto& k : offsets) {
    for (std::size_t t : times) {
      check_time(measure, t);
      std::vector<double> values(measure.atom_count());
      for (std::size_t a = 0; a < values.size(); ++a) values[a] = measure.value(a, k, t);
      std::sort(values.begin(), values.end());
      MarginalRow row;
      row.offset = k;
      row.time = t;
      row.mean = sorted_sum(values) / count;
      std::vector<double> squares(values.size());
      for (std::size_t a = 0; a < values.size(); ++a) {
        squares[a] = (values[a] - row.mean) * (values[a] - row.mean);
      }
      row.variance = sorted_sum(std::move(squares)) / count;
      for (double q : levels) row.quantiles.push_back(quantile7(values, q));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_marginal_csv(std::ostream& out, const std::vector<MarginalRow>& rows, int dim,
                        std::span<const double> levels) {
  out << "offset,time,mean,variance";
  for (double q : levels) out << ",q" << format_double(q);
  out << '\n';
  for (const auto& row : rows) {
    out << format_index(row.offset, dim) << ',' << row.time << ',' << format_double(row.mean) << ','
        << format_double(row.variance);
    for (double v : row.quantiles) out << ',' << format_double(v);
    out << '\n';
  }
}

double spatial_covariance(const EmpiricalMeasure& measure, const LatticeIndex& k, std::size_t time) {
  check_time(measure, time);
  const auto& shape = measure.shape();
  const auto row = measure.base().row(time);
  const double count = static_cast<double>(shape.site_count());
  const double mean = sorted_sum({row.begin(), row.end()}) / count;
  const auto perm = shift_permutation(shape, k);
  std::vector<double> products(shape.site_count());
  for (std::size_t j = 0; j < products.size(); ++j) {
    products[j] = (row[j] - mean) * (row[perm[j]] - mean);
  }
  return sorted_sum(std::move(products)) / count;
}

double bl_distance(const EmpiricalMeasure& first, const EmpiricalMeasure& second,
                   std::span<const LatticeIndex> offsets, std::span<const std::size_t> times,
                   const BlOptions& options) {
  if (!(first.shape() == second.shape())) {
    fail(ErrorCode::invalid_argument, "measures live on different lattices");
  }
  if (offsets.empty() || times.empty()) fail(ErrorCode::invalid_argument, "empty projection");
  for (std::size_t t : times) {
    check_time(first, t);
    check_time(second, t);
  }
  const std::size_t dim = offsets.size() * times.size();
  auto project = [&](const EmpiricalMeasure& m) {
    std::vector<double> coords(m.atom_count() * dim);
    for (std::size_t a = 0; a < m.atom_count(); ++a) {
      std::size_t c = 0;
      for (const auto& k : offsets) {
        for (std::size_t t : times) coords[a * dim + c++] = m.value(a, k, t);
      }
    }
    return coords;
  };
  const auto x = project(first), y = project(second);

  // Scale for the random centres: spread of the pooled coordinates.
  double lo = 0.0, hi = 0.0;
  if (!x.empty()) lo = hi = x.front();
  for (double v : x) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : y) lo = std::min(lo, v), hi = std::max(hi, v);

  Engine engine = replica_engine(options.seed, 0);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto expectation = [&](const std::vector<double>& coords, std::size_t atoms, const auto& f) {
    std::vector<double> values(atoms);
    for (std::size_t a = 0; a < atoms; ++a) values[a] = f(&coords[a * dim]);
    return sorted_sum(std::move(values)) / static_cast<double>(atoms);
  };

  double distance = 0.0;
  std::vector<double> u(dim), centre(dim);
  for (std::size_t i = 0; i < options.functions; ++i) {
    double l1 = 0.0;
    for (auto& v : u) l1 += std::abs(v = normal(engine));
    for (auto& v : u) v /= std::max(l1, 1e-300);
    for (auto& v : centre) v = lo + (hi - lo) * uniform(engine);
    const double radius = (hi - lo) * uniform(engine);
    const bool linear = i % 2 == 0;
    // linear: clip(<u, x - c>) with |u|_1 = 1; bump: clip(radius - |x - c|_inf)
    auto f = [&](const double* p) {
      double s = 0.0;
      if (linear) {
        for (std::size_t c = 0; c < dim; ++c) s += u[c] * (p[c] - centre[c]);
      } else {
        double d = 0.0;
        for (std::size_t c = 0; c < dim; ++c) d = std::max(d, std::abs(p[c] - centre[c]));
        s = radius - d;
      }
      return std::clamp(s, -1.0, 1.0);
    };
    const double gap = expectation(x, first.atom_count(), f) - expectation(y, second.atom_count(), f);
    distance = std::max(distance, std::abs(gap));
  }
  return distance;
}

NormSummary weighted_ensemble_norms(const EmpiricalMeasure& measure, const KernelFamily& kernel) {
  const auto& shape = measure.shape();
  const auto weights = kernel.periodic_weights(shape);
  const auto sup = measure.base().sup_norms();
  NormSummary out;
  std::vector<double> norms(measure.atom_count());
  std::vector<double> shifted(shape.site_count());
  for (std::size_t a = 0; a < norms.size(); ++a) {
    const auto perm = shift_permutation(shape, measure.shift(a));
    for (std::size_t m = 0; m < shifted.size(); ++m) shifted[m] = sup[perm[m]];
    norms[a] = weighted_norm(shifted, weights);
  }
  out.min = *std::min_element(norms.begin(), norms.end());
  out.max = *std::max_element(norms.begin(), norms.end());
  out.mean = sorted_sum(norms) / static_cast<double>(norms.size());
  return out;
}

}  // namespace lattice_ldp
