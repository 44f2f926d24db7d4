#pragma once

// Entry points behind the command-line tool. Each returns a process exit code:
// 0 ok, 1 verification failure, 2 config error, 3 numerical failure.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lattice_ldp/config.hpp"
#include "lattice_ldp/error.hpp"

namespace lattice_ldp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerification = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

const char* code_version();

struct CommandOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  unsigned workers = 1;
  std::string suite = "all";
  std::string observable = "site0_sup";
  /// "auto" or a number.
  std::string threshold = "auto";
  std::vector<int> n_list{1, 2, 3};
};

/// Writes paths.csv / paths.bin / noise.csv / summary.json (as listed in run.outputs)
/// and manifest.json into out_dir.
int cmd_simulate(const CommandOptions& options, std::ostream& out, std::ostream& err);
/// Prints one PASS/FAIL line per check with its margin.
int cmd_verify(const CommandOptions& options, std::ostream& out, std::ostream& err);
/// Writes scaling.csv and manifest.json into out_dir.
int cmd_scaling(const CommandOptions& options, std::ostream& out, std::ostream& err);

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  /// Distance to the failure boundary; negative when failing.
  double margin = 0.0;
  std::string detail;
};

std::string format_check(const CheckResult& check);

/// kernels | noise | dynamics | empirical | all
std::vector<CheckResult> run_suite(const std::string& suite, const RunConfig& config,
                                   unsigned workers);

/// Exit code for an exception escaping a command.
int exit_code_for(ErrorCode code);

/// The config with --seed / --replicas overrides applied.
RunConfig resolve_config(const CommandOptions& options);

}  // namespace lattice_ldp
