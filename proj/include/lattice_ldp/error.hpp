#pragma once

#include <stdexcept>
#include <string>

namespace lattice_ldp {

enum class ErrorCode {
  invalid_argument,
  negative_spectrum,
  nonfinite_state,
  division_degenerate,
  duplicate_name,
  config_invalid,
  io_failure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
    case ErrorCode::negative_spectrum: return "NEGATIVE_SPECTRUM";
    case ErrorCode::nonfinite_state: return "NONFINITE_STATE";
    case ErrorCode::division_degenerate: return "DIVISION_DEGENERATE";
    case ErrorCode::duplicate_name: return "DUPLICATE_NAME";
    case ErrorCode::config_invalid: return "CONFIG_INVALID";
    case ErrorCode::io_failure: return "IO_FAILURE";
  }
  return "UNKNOWN";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lattice_ldp
