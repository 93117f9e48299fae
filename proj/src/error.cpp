#include "hemoreduce/error.hpp"

namespace hemoreduce {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDimension: return "NonPositiveDimension";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::HOutOfRange: return "HOutOfRange";
    case ErrorCode::UnstableDt: return "UnstableDt";
    case ErrorCode::PoissonNoConvergence: return "PoissonNoConvergence";
    case ErrorCode::NoSteadyState: return "NoSteadyState";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AlreadyHomogenized: return "AlreadyHomogenized";
    case ErrorCode::MissingInletValues: return "MissingInletValues";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::BasisMismatch: return "BasisMismatch";
    case ErrorCode::SingularPressureSystem: return "SingularPressureSystem";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::PowerIterationNoConvergence: return "PowerIterationNoConvergence";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::ZeroReferenceNorm: return "ZeroReferenceNorm";
    case ErrorCode::MissingPhase: return "MissingPhase";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

}  // namespace hemoreduce
