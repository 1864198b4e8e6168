#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace delayiqc {

enum class ErrorCode {
  kDimensionMismatch,
  kSingularResolvent,
  kIllPosedLoop,
  kImaginaryAxisPole,
  kNoStabilizingSolution,
  kSingularDpi,
  kRateBoundTooLarge,
  kDegenerateMultiplier,
  kNegativeCoefficient,
  kNotPsd,
  kInfeasible,
  kInfeasibleAtLo,
  kSolverFailure,
  kDegreeTooLow,
  kStepTooLarge,
  kNoCrossover,
  kInvalidArgument,
  kConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularResolvent: return "SingularResolvent";
    case ErrorCode::kIllPosedLoop: return "IllPosedLoop";
    case ErrorCode::kImaginaryAxisPole: return "ImaginaryAxisPole";
    case ErrorCode::kNoStabilizingSolution: return "NoStabilizingSolution";
    case ErrorCode::kSingularDpi: return "SingularDpi";
    case ErrorCode::kRateBoundTooLarge: return "RateBoundTooLarge";
    case ErrorCode::kDegenerateMultiplier: return "DegenerateMultiplier";
    case ErrorCode::kNegativeCoefficient: return "NegativeCoefficient";
    case ErrorCode::kNotPsd: return "NotPSD";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kInfeasibleAtLo: return "InfeasibleAtLo";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kDegreeTooLow: return "DegreeTooLow";
    case ErrorCode::kStepTooLarge: return "StepTooLarge";
    case ErrorCode::kNoCrossover: return "NoCrossover";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace delayiqc
