#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hydrocast {

enum class ErrorCode {
  kMissingColumn,
  kUnknownColumn,
  kNonFiniteValue,
  kInvalidValue,
  kDuplicateTimestamp,
  kEmptyDataset,
  kFractionOutOfRange,
  kTooFewSamples,
  kEmptyPlantedSet,
  kUnknownName,
  kEmptyInput,
  kShapeMismatch,
  kZeroNormVector,
  kLengthMismatch,
  kZeroNormColumn,
  kNonFiniteResidual,
  kSingularSystem,
  kNonConvergence,
  kDuplicateKind,
  kZeroVariance,
  kEmptyReport,
  kInvalidConfig,
  kIo,
  kParse,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; `code()` lets callers
// branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hydrocast
