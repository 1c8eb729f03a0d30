#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace netharvest {

enum class ErrorCode {
  // Model construction and input validation.
  kNegativeWeight,
  kNonzeroDiagonal,
  kNotStronglyConnected,
  kNotSymmetric,
  kDimensionMismatch,
  kInvalidPattern,
  kInvalidParameter,
  kNonpositiveMass,
  kNonpositiveConsumption,
  kZeroTotalMass,
  kNoninteriorPolicy,
  kSideConditionViolated,
  kParseError,
  // Spectral failures: signal a violated structural hypothesis upstream.
  kDominantEigenvalueNotZero,
  kDominantVectorNotPositive,
  kNullSpaceDimensionNot1,
  kMatchingFailed,
  // Runtime.
  kStepSizeUnderflow,
  kHorizonNonpositive,
  kNonconvergentTail,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by bad inputs (exit code 2 in the CLI) rather than
/// by a failed computation.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<long> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }
  /// Offending node (0-based) or line number, when the error names one.
  std::optional<long> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::optional<long> index_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNegativeWeight: return "NegativeWeight";
    case ErrorCode::kNonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::kNotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidPattern: return "InvalidPattern";
    case ErrorCode::kInvalidParameter: return "InvalidParameter";
    case ErrorCode::kNonpositiveMass: return "NonpositiveMass";
    case ErrorCode::kNonpositiveConsumption: return "NonpositiveConsumption";
    case ErrorCode::kZeroTotalMass: return "ZeroTotalMass";
    case ErrorCode::kNoninteriorPolicy: return "NoninteriorPolicy";
    case ErrorCode::kSideConditionViolated: return "SideConditionViolated";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDominantEigenvalueNotZero: return "DominantEigenvalueNotZero";
    case ErrorCode::kDominantVectorNotPositive: return "DominantVectorNotPositive";
    case ErrorCode::kNullSpaceDimensionNot1: return "NullSpaceDimensionNot1";
    case ErrorCode::kMatchingFailed: return "MatchingFailed";
    case ErrorCode::kStepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::kHorizonNonpositive: return "HorizonNonpositive";
    case ErrorCode::kNonconvergentTail: return "NonconvergentTail";
    case ErrorCode::kIoError: return "IoError";
  }
  return "UnknownError";
}

inline bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNegativeWeight:
    case ErrorCode::kNonzeroDiagonal:
    case ErrorCode::kNotStronglyConnected:
    case ErrorCode::kNotSymmetric:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInvalidPattern:
    case ErrorCode::kInvalidParameter:
    case ErrorCode::kNonpositiveMass:
    case ErrorCode::kNonpositiveConsumption:
    case ErrorCode::kZeroTotalMass:
    case ErrorCode::kNoninteriorPolicy:
    case ErrorCode::kSideConditionViolated:
    case ErrorCode::kParseError:
      return true;
    default:
      return false;
  }
}

}  // namespace netharvest
