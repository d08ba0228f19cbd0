#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reidbench {

enum class ErrorCode {
  kIo,
  kInvalidArgument,
  // ingest
  kMissingColumn,
  kDuplicateImageId,
  kDuplicateEmbeddingIndex,
  kBadSplitValue,
  kBadValue,
  kQueryWithoutGalleryMatch,
  kBadMagic,
  kVersionUnsupported,
  kTruncatedPayload,
  kNonFiniteValue,
  kMalformedLine,
  kNegativeDimension,
  kOutOfRangeIndex,
  // standard evaluation
  kDimensionMismatch,
  kZeroVector,
  kEmptyGalleryAfterFilter,
  kNoMatchInGallery,
  // combiner
  kTooFewSources,
  kExcludedNotFound,
  kQuotaExceedsSource,
  kUnknownSource,
  // live evaluation
  kNoTrials,
  // stats / report
  kEmptySelection,
  kLengthMismatch,
  kZeroVarianceDifferences,
  kInconsistentKeys,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
// The message always names the offending row, line, or key when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reidbench
