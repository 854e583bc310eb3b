#pragma once

#include <stdexcept>
#include <string>

namespace geoblock {

enum class ErrorKind {
  InvalidProfile,
  InvalidArgument,
  StepFailure,
  NotPeriodic,
  NoConvergence,
  NotPrime,
  ZeroDisplacement,
  HorizonExceeded,
  MissingGeodesic,
  HypothesisViolated,
  TangencyDetected,
  Rejected,
};

const char* to_string(ErrorKind kind);

// Domain error carrying a machine-readable kind. Input errors (bad profile
// files, malformed arguments) are distinguished from domain failures by the
// CLI through is_input_error().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  bool is_input_error() const noexcept {
    return kind_ == ErrorKind::InvalidProfile || kind_ == ErrorKind::InvalidArgument;
  }

 private:
  ErrorKind kind_;
};

}  // namespace geoblock
