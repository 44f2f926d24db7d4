#pragma once

// Interaction bounds kappa^k and the dominating weight sequence lambda^j.
//
// lambda is defined through its symbol
//     lambda~(theta) = h / (2 kappa_* - kappa~(theta)),   h = kappa_*,
// so that sum_j lambda^j = lambda~(0) = 1 and
//     sum_k lambda^{j-k} kappa^k - 2 kappa_* lambda^j = -h [j == 0].
// The symbol is sampled on an M^d frequency grid and inverted by FFT.

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lattice_ldp/lattice.hpp"

namespace lattice_ldp {

enum class KappaFamily { geometric, exponential, table };

KappaFamily parse_kappa_family(const std::string& name);
std::string to_string(KappaFamily family);

struct KappaSpec {
  KappaFamily family = KappaFamily::geometric;
  double rate = 0.5;   // rho in (0,1)
  double scale = 1.0;
  int support = 40;    // R, stored on |k|_inf <= R
};

/// Defaults per dimension: M for build_lambda, kappa support R and lambda support R_lambda.
/// Each satisfies M >= 4 R_lambda and keeps the lambda tail below 1e-6 for rate 0.5.
int default_spectral_grid(int dim);
int default_kappa_support(int dim);
int default_lambda_support(int dim);

class KernelFamily {
 public:
  int dim() const noexcept { return dim_; }
  const KappaSpec& spec() const noexcept { return spec_; }

  int support() const noexcept { return kappa_shape_.radius(); }
  const LatticeShape& kappa_shape() const noexcept { return kappa_shape_; }
  /// Stored kappa over V_R in lattice order.
  std::span<const double> kappa_values() const noexcept { return kappa_; }
  /// kappa^k, zero outside the stored support.
  double kappa(const LatticeIndex& k) const;
  /// Sum of stored kappa.
  double kappa_star() const noexcept { return kappa_star_; }
  /// Total mass of the untruncated family (equals kappa_star for tables).
  double kappa_total() const noexcept { return kappa_total_; }
  /// kappa_total - kappa_star.
  double truncation_remainder() const noexcept { return kappa_total_ - kappa_star_; }
  /// kappa-bar_n = sum over k outside V_n of the untruncated family.
  double kappa_tail(int n) const;

  bool has_lambda() const noexcept { return !lambda_.empty(); }
  int lambda_support() const noexcept { return lambda_shape_.radius(); }
  const LatticeShape& lambda_shape() const noexcept { return lambda_shape_; }
  int spectral_grid() const noexcept { return spectral_grid_; }
  std::span<const double> lambda_values() const noexcept { return lambda_; }
  double lambda(const LatticeIndex& j) const;
  /// Mass that fell outside V_{R_lambda} before renormalisation.
  double lambda_tail_mass() const noexcept { return lambda_tail_mass_; }

  /// omega_s = sum of lambda^j over stored j with j mod V_n = s. These are the
  /// weights of the lambda-norm for a V_n-periodic field.
  std::vector<double> periodic_weights(const LatticeShape& torus) const;

  friend KernelFamily build_kappa(int dim, const KappaSpec& spec);
  friend KernelFamily kappa_from_table(int dim,
                                       const std::vector<std::pair<LatticeIndex, double>>& entries);
  friend KernelFamily build_lambda(const KernelFamily& family, int grid, int lambda_support);

 private:
  int dim_ = 1;
  KappaSpec spec_;
  LatticeShape kappa_shape_;
  std::vector<double> kappa_;
  double kappa_star_ = 0.0;
  double kappa_total_ = 0.0;
  std::vector<double> shells_;  // untruncated shell masses, exponential family only

  LatticeShape lambda_shape_;
  std::vector<double> lambda_;
  int spectral_grid_ = 0;
  double lambda_tail_mass_ = 0.0;
};

/// Geometric: kappa^k = scale * rho^{|k|_1}. Exponential: scale * rho^{|k|_2}.
KernelFamily build_kappa(int dim, const KappaSpec& spec);

/// Explicit table; rejects non-positive values and tables that are not
/// symmetric under coordinate sign flips. Missing entries inside the bounding
/// cube are rejected as well.
KernelFamily kappa_from_table(int dim, const std::vector<std::pair<LatticeIndex, double>>& entries);

/// Requires grid >= 4 * lambda_support and grid > 2 * support.
KernelFamily build_lambda(const KernelFamily& family, int grid, int lambda_support);

struct DominationReport {
  /// max over the safe interior of (sum_k lambda^{j-k} kappa^k - 2 kappa_* lambda^j) / lambda^j.
  double max_violation = 0.0;
  LatticeIndex worst{0, 0, 0};
  /// |sum_j lambda^j - 1|.
  double normalization_error = 0.0;
  double min_lambda = 0.0;
  /// 2 kappa_* lambda^0 - sum_k lambda^{-k} kappa^k; positive (equals h) for a valid family.
  double origin_gap = 0.0;
  std::size_t interior_sites = 0;
};

DominationReport check_domination(const KernelFamily& family);

/// sqrt(sum_j lambda^j sup_t |X^{j mod V_n}_t|^2), X read through its periodic extension.
double weighted_norm(const PathField& field, const KernelFamily& family);

/// Same norm from per-site sup norms and precomputed periodic weights.
double weighted_norm(std::span<const double> sup_norms, std::span<const double> periodic_weights);

/// CSV with header "component,offset,value"; offsets as space-separated coordinates.
void write_kernel_csv(std::ostream& out, const KernelFamily& family);
/// Reads the kappa rows of a kernel CSV back into a table family.
KernelFamily read_kernel_csv(std::istream& in, int dim);

}  // namespace lattice_ldp
