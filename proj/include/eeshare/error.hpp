#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eeshare {

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  // inner solver
  Infeasible,
  NumericalFailure,
  // fractional programming
  SubproblemFailed,
  MaxIterExceeded,
  NonMonotoneObjective,
  // underlay
  R1StarExceedsDirectCapacity,
  R2StarInfeasible,
  GammaBracketFailure,
  // overlay
  DegenerateChannel,
  Rank1Infeasible,
  InitInfeasible,
  // channel generation / harness
  PlacementFailed,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the harness in particular) can classify per-drop outcomes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace eeshare
