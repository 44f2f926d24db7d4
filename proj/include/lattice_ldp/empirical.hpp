#pragma once

// Periodic empirical measure of one path field over V_n.
//
// The atoms are the |V_n| shifted fields S^j X, j in V_n, each with mass 1/|V_n|.
// They are not materialised: atom j reads X at (k + j) mod V_n.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "lattice_ldp/kernels.hpp"
#include "lattice_ldp/lattice.hpp"

namespace lattice_ldp {

class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(PathField base);
  explicit EmpiricalMeasure(std::shared_ptr<const PathField> base);

  const PathField& base() const noexcept { return *base_; }
  const LatticeShape& shape() const noexcept { return base_->shape; }
  std::size_t atom_count() const noexcept { return shifts_.size(); }
  double mass() const noexcept { return 1.0 / static_cast<double>(atom_count()); }
  const LatticeIndex& shift(std::size_t atom) const { return shifts_[atom]; }

  /// (S^{shift(atom)} X)^k_t for any lattice offset k (periodic interpolant).
  double value(std::size_t atom, const LatticeIndex& k, std::size_t time) const;
  PathField atom(std::size_t a) const;

 private:
  std::shared_ptr<const PathField> base_;
  std::vector<LatticeIndex> shifts_;
};

EmpiricalMeasure empirical_measure(PathField field);

/// Exact index check that shifting every atom by each s permutes the atom set.
bool stationarity_check(const EmpiricalMeasure& measure, std::span<const LatticeIndex> shifts);

inline constexpr double kDefaultLevels[] = {0.05, 0.25, 0.5, 0.75, 0.95};

struct MarginalRow {
  LatticeIndex offset{0, 0, 0};
  std::size_t time = 0;  // position in the base field
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> quantiles;
};

/// Type-7 quantiles at `levels`; values are sorted before summation, so the mean
/// does not depend on the offset.
std::vector<MarginalRow> marginal_statistics(const EmpiricalMeasure& measure,
                                             std::span<const LatticeIndex> offsets,
                                             std::span<const std::size_t> times,
                                             std::span<const double> levels = kDefaultLevels);

void write_marginal_csv(std::ostream& out, const std::vector<MarginalRow>& rows, int dim,
                        std::span<const double> levels);

/// (1/|V_n|) sum_j (X^j_t - m)(X^{(j+k) mod V_n}_t - m), m the spatial mean.
double spatial_covariance(const EmpiricalMeasure& measure, const LatticeIndex& k, std::size_t time);

struct BlOptions {
  std::size_t functions = 256;
  std::uint64_t seed = 1;
};

/// Randomised bounded-Lipschitz distance between the laws of the projected
/// coordinates (offset, time) under two measures. Test functions are bounded
/// by 1 and 1-Lipschitz for the sup norm on the projection; the same family
/// (fixed by seed) is used for every pair, so this is a pseudometric.
double bl_distance(const EmpiricalMeasure& first, const EmpiricalMeasure& second,
                   std::span<const LatticeIndex> offsets, std::span<const std::size_t> times,
                   const BlOptions& options = {});

struct NormSummary {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

/// ||atom||_{T,lambda} over the atoms.
NormSummary weighted_ensemble_norms(const EmpiricalMeasure& measure, const KernelFamily& kernel);

}  // namespace lattice_ldp
