#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ampc {

enum class ErrorCode {
  Configuration,
  EigenvalueOneAtEquilibrium,
  NoEquilibriumFound,
  PeriodicityJacobianSingular,
  ShootingDiverged,
  WindowTooShort,
  CertificationFailed,
  GenerationFailed,
  PenaltyStalled,
  RolloutDiverged,
  ConvergenceFailure,
  IllConditionedUpdate,
  NonFiniteState,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is the
/// machine-readable category; what() carries a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorCode::Configuration, message) {}
};

}  // namespace ampc
