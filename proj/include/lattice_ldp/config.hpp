#pragma once

// Run configuration: a plain-text file of [section] headers and key = value
// lines ('#' starts a comment). Unknown sections and keys are errors. Every
// default is filled in by parse_config, and to_ini / manifest_json write the
// fully resolved configuration back out, so either output loads as a config.
//
//   [lattice]  d n
//   [time]     T dt
//   [kernel]   family rho scale R R_lambda M
//   [noise]    family rho_a sigma2 time_profile
//   [fhn]      a_fr c_fr u_ini f1 f2
//   [learning] J_bar0 rho_J R_J J_corr J_dec J_ini v_fn
//   [run]      seed replicas record_every outputs

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lattice_ldp/dynamics.hpp"
#include "lattice_ldp/kernels.hpp"
#include "lattice_ldp/noise.hpp"

namespace lattice_ldp {

struct RunConfig {
  int dim = 1;
  int radius = 4;
  double horizon = 1.0;
  double dt = 1e-3;
  KappaSpec kappa;
  int lambda_support = 0;
  int spectral_grid = 0;
  CovarianceSpec noise;
  NetworkModel model;
  std::uint64_t seed = 1;
  std::size_t replicas = 100;
  std::size_t record_every = 10;
  /// Any of: paths_csv, paths_bin, noise_csv, summary.
  std::vector<std::string> outputs{"paths_csv", "summary"};

  /// "section.key" -> line of the value in the source, for error messages.
  std::map<std::string, int> lines;

  LatticeShape shape() const { return LatticeShape(dim, radius); }
  TimeGrid grid() const { return TimeGrid::from_step(horizon, dt); }
  bool wants(const std::string& output) const;
};

/// Parses and validates; throws config_invalid with "<source>:<line>: ..." messages.
RunConfig parse_config(std::istream& in, const std::string& source = "config");
/// Reads an INI config, or a JSON manifest (its "config" object).
RunConfig load_config(const std::string& path);
RunConfig config_from_json(const nlohmann::json& manifest, const std::string& source = "manifest");

/// Cross-checks of a parsed config: dt divides T, R_J <= n, kappa^k >= Jbar^k fbar^2.
void validate_config(const RunConfig& config);

using ConfigSections = std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>;

/// Resolved values as strings, in schema order.
ConfigSections config_sections(const RunConfig& config);
std::string to_ini(const RunConfig& config);
nlohmann::json config_json(const RunConfig& config);

}  // namespace lattice_ldp
