#pragma once

// Torus geometry over the cube V_n = {-n..n}^d, d <= 3.
//
// Sites are ordered lexicographically: the first coordinate is most
// significant and every coordinate runs upward from -n. A site with
// coordinates c maps to the flat offset sum_p (c_p + n) * side^(d-1-p).

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lattice_ldp {

/// Integer lattice point. Coordinates beyond the lattice dimension are zero.
using LatticeIndex = std::array<int, 3>;

class LatticeShape {
 public:
  LatticeShape() = default;
  LatticeShape(int dim, int radius);

  int dim() const noexcept { return dim_; }
  int radius() const noexcept { return radius_; }
  int side() const noexcept { return 2 * radius_ + 1; }
  std::size_t site_count() const noexcept { return site_count_; }

  /// Flat offset of an index already inside the cube.
  std::size_t flat(const LatticeIndex& index) const;
  LatticeIndex index(std::size_t flat) const;
  bool contains(const LatticeIndex& index) const noexcept;

  friend bool operator==(const LatticeShape&, const LatticeShape&) = default;

 private:
  int dim_ = 1;
  int radius_ = 0;
  std::size_t site_count_ = 1;
};

/// All sites of the cube in flat order.
std::vector<LatticeIndex> cube_indices(const LatticeShape& shape);

/// Coordinate-wise residue into [-n, n].
LatticeIndex mod_torus(const LatticeIndex& index, const LatticeShape& shape);

LatticeIndex operator+(const LatticeIndex& a, const LatticeIndex& b);
LatticeIndex operator-(const LatticeIndex& a, const LatticeIndex& b);
LatticeIndex operator-(const LatticeIndex& a);

int l1_norm(const LatticeIndex& index, int dim);
int sup_norm(const LatticeIndex& index, int dim);
std::string format_index(const LatticeIndex& index, int dim);

/// perm[m] = flat((m + shift) mod V_n). Reading field[perm[m]] gives (S^shift X)^m.
std::vector<std::size_t> shift_permutation(const LatticeShape& shape, const LatticeIndex& shift);

/// (S^j X)^m = X^{(m+j) mod V_n}.
std::vector<double> shift_field(std::span<const double> field, const LatticeShape& shape,
                                const LatticeIndex& shift);

/// table[site * offsets.size() + o] = flat((site + offsets[o]) mod V_n).
std::vector<std::size_t> neighbor_table(const LatticeShape& shape,
                                        std::span<const LatticeIndex> offsets);

/// Uniform time grid 0 = t_0 < ... < t_K = T.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, std::size_t steps);

  /// Rejects dt <= 0 and step sizes that do not divide T within 1e-12.
  static TimeGrid from_step(double horizon, double dt);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t points() const noexcept { return steps_ + 1; }
  double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }
  double time(std::size_t step) const noexcept { return dt() * static_cast<double>(step); }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_ = 1.0;
  std::size_t steps_ = 1;
};

/// Site paths sampled on a set of time points, stored time-major.
struct PathField {
  LatticeShape shape;
  std::size_t time_points = 0;
  std::vector<double> values;

  PathField() = default;
  PathField(const LatticeShape& s, std::size_t points, double fill = 0.0)
      : shape(s), time_points(points), values(points * s.site_count(), fill) {}

  double& at(std::size_t time, std::size_t site) { return values[time * shape.site_count() + site]; }
  double at(std::size_t time, std::size_t site) const {
    return values[time * shape.site_count() + site];
  }
  std::span<double> row(std::size_t time) {
    return {values.data() + time * shape.site_count(), shape.site_count()};
  }
  std::span<const double> row(std::size_t time) const {
    return {values.data() + time * shape.site_count(), shape.site_count()};
  }

  /// sup_t |X^j_t| per site over the stored time points.
  std::vector<double> sup_norms() const;
  /// sup norms restricted to the first `points` stored time points.
  std::vector<double> sup_norms(std::size_t points) const;

  PathField shifted(const LatticeIndex& shift) const;
};

}  // namespace lattice_ldp
