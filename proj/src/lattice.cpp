#include "lattice_ldp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "lattice_ldp/error.hpp"

namespace lattice_ldp {

LatticeShape::LatticeShape(int dim, int radius) : dim_(dim), radius_(radius) {
  if (dim < 1 || dim > 3) {
    fail(ErrorCode::invalid_argument, "lattice dimension must be 1, 2 or 3 (got " +
                                          std::to_string(dim) + ")");
  }
  if (radius < 0) {
    fail(ErrorCode::invalid_argument, "torus radius must be >= 0");
  }
  site_count_ = 1;
  for (int p = 0; p < dim; ++p) site_count_ *= static_cast<std::size_t>(side());
}

std::size_t LatticeShape::flat(const LatticeIndex& index) const {
  std::size_t offset = 0;
  for (int p = 0; p < dim_; ++p) {
    offset = offset * static_cast<std::size_t>(side()) + static_cast<std::size_t>(index[p] + radius_);
  }
  return offset;
}

LatticeIndex LatticeShape::index(std::size_t flat) const {
  LatticeIndex out{0, 0, 0};
  const auto s = static_cast<std::size_t>(side());
  for (int p = dim_ - 1; p >= 0; --p) {
    out[p] = static_cast<int>(flat % s) - radius_;
    flat /= s;
  }
  return out;
}

bool LatticeShape::contains(const LatticeIndex& index) const noexcept {
  for (int p = 0; p < dim_; ++p) {
    if (index[p] < -radius_ || index[p] > radius_) return false;
  }
  for (int p = dim_; p < 3; ++p) {
    if (index[p] != 0) return false;
  }
  return true;
}

std::vector<LatticeIndex> cube_indices(const LatticeShape& shape) {
  std::vector<LatticeIndex> out;
  out.reserve(shape.site_count());
  for (std::size_t i = 0; i < shape.site_count(); ++i) out.push_back(shape.index(i));
  return out;
}

LatticeIndex mod_torus(const LatticeIndex& index, const LatticeShape& shape) {
  const int side = shape.side();
  const int n = shape.radius();
  LatticeIndex out{0, 0, 0};
  for (int p = 0; p < shape.dim(); ++p) {
    int r = (index[p] + n) % side;
    if (r < 0) r += side;
    out[p] = r - n;
  }
  return out;
}

LatticeIndex operator+(const LatticeIndex& a, const LatticeIndex& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

LatticeIndex operator-(const LatticeIndex& a, const LatticeIndex& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

LatticeIndex operator-(const LatticeIndex& a) { return {-a[0], -a[1], -a[2]}; }

int l1_norm(const LatticeIndex& index, int dim) {
  int total = 0;
  for (int p = 0; p < dim; ++p) total += std::abs(index[p]);
  return total;
}

int sup_norm(const LatticeIndex& index, int dim) {
  int best = 0;
  for (int p = 0; p < dim; ++p) best = std::max(best, std::abs(index[p]));
  return best;
}

std::string format_index(const LatticeIndex& index, int dim) {
  std::string out = "(";
  for (int p = 0; p < dim; ++p) {
    if (p > 0) out += ",";
    out += std::to_string(index[p]);
  }
  return out + ")";
}

std::vector<std::size_t> shift_permutation(const LatticeShape& shape, const LatticeIndex& shift) {
  std::vector<std::size_t> perm(shape.site_count());
  for (std::size_t m = 0; m < perm.size(); ++m) {
    perm[m] = shape.flat(mod_torus(shape.index(m) + shift, shape));
  }
  return perm;
}

std::vector<double> shift_field(std::span<const double> field, const LatticeShape& shape,
                                const LatticeIndex& shift) {
  if (field.size() != shape.site_count()) {
    fail(ErrorCode::invalid_argument, "field size does not match lattice");
  }
  const auto perm = shift_permutation(shape, shift);
  std::vector<double> out(field.size());
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = field[perm[m]];
  return out;
}

std::vector<std::size_t> neighbor_table(const LatticeShape& shape,
                                        std::span<const LatticeIndex> offsets) {
  std::vector<std::size_t> table(shape.site_count() * offsets.size());
  for (std::size_t site = 0; site < shape.site_count(); ++site) {
    const auto base = shape.index(site);
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      table[site * offsets.size() + o] = shape.flat(mod_torus(base + offsets[o], shape));
    }
  }
  return table;
}

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    fail(ErrorCode::invalid_argument, "time horizon must be positive");
  }
  if (steps == 0) fail(ErrorCode::invalid_argument, "time grid needs at least one step");
}

TimeGrid TimeGrid::from_step(double horizon, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    fail(ErrorCode::invalid_argument, "time step must be positive");
  }
  const double ratio = horizon / dt;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::abs(steps * dt - horizon) > 1e-12) {
    fail(ErrorCode::invalid_argument, "time step does not divide the horizon");
  }
  return TimeGrid(horizon, static_cast<std::size_t>(steps));
}

std::vector<double> PathField::sup_norms() const { return sup_norms(time_points); }

std::vector<double> PathField::sup_norms(std::size_t points) const {
  std::vector<double> sup(shape.site_count(), 0.0);
  for (std::size_t t = 0; t < std::min(points, time_points); ++t) {
    const auto r = row(t);
    for (std::size_t j = 0; j < sup.size(); ++j) sup[j] = std::max(sup[j], std::abs(r[j]));
  }
  return sup;
}

PathField PathField::shifted(const LatticeIndex& shift) const {
  const auto perm = shift_permutation(shape, shift);
  PathField out(shape, time_points);
  for (std::size_t t = 0; t < time_points; ++t) {
    const auto src = row(t);
    auto dst = out.row(t);
    for (std::size_t m = 0; m < perm.size(); ++m) dst[m] = src[perm[m]];
  }
  return out;
}

}  // namespace lattice_ldp
