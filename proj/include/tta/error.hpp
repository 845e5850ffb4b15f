#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tta {

enum class ErrorCode {
  NonFiniteInput,
  EmptyVector,
  DimensionMismatch,
  InvalidArgument,
  InvariantViolation,
  // augment
  InvalidCropSize,
  UnknownTransform,
  GeometryError,
  ManifestParse,
  // aggregate
  EmptyTrainingSet,
  EmptySelectionPool,
  ProjectionViolation,
  // metrics
  LengthMismatch,
  DegenerateVariance,
  EmptySubsample,
  // io
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  LabelOutOfRange,
  EmptySet,
  NegativeWeight,
  UnsupportedMode,
  DegenerateSplit,
  NonMonotoneIncrements,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a stable error code; every library failure is one of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace tta
