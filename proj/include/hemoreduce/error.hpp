#pragma once

#include <stdexcept>
#include <string>

namespace hemoreduce {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDimension,
  ResolutionTooCoarse,
  HOutOfRange,
  UnstableDt,
  PoissonNoConvergence,
  NoSteadyState,
  LengthMismatch,
  AlreadyHomogenized,
  MissingInletValues,
  NotSymmetric,
  RankDeficient,
  BasisMismatch,
  SingularPressureSystem,
  BlowUp,
  PowerIterationNoConvergence,
  SingularNormalEquations,
  HorizonTooShort,
  ZeroReferenceNorm,
  MissingPhase,
  BadMagic,
  TruncatedPayload,
  VersionMismatch,
  IoFailure,
  ConfigError,
  MissingArtifact,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hemoreduce
