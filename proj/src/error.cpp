#include "reidbench/error.hpp"

namespace reidbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kDuplicateImageId: return "DuplicateImageId";
    case ErrorCode::kDuplicateEmbeddingIndex: return "DuplicateEmbeddingIndex";
    case ErrorCode::kBadSplitValue: return "BadSplitValue";
    case ErrorCode::kBadValue: return "BadValue";
    case ErrorCode::kQueryWithoutGalleryMatch: return "QueryWithoutGalleryMatch";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kNegativeDimension: return "NegativeDimension";
    case ErrorCode::kOutOfRangeIndex: return "OutOfRangeIndex";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kEmptyGalleryAfterFilter: return "EmptyGalleryAfterFilter";
    case ErrorCode::kNoMatchInGallery: return "NoMatchInGallery";
    case ErrorCode::kTooFewSources: return "TooFewSources";
    case ErrorCode::kExcludedNotFound: return "ExcludedNotFound";
    case ErrorCode::kQuotaExceedsSource: return "QuotaExceedsSource";
    case ErrorCode::kUnknownSource: return "UnknownSource";
    case ErrorCode::kNoTrials: return "NoTrials";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kZeroVarianceDifferences: return "ZeroVarianceDifferences";
    case ErrorCode::kInconsistentKeys: return "InconsistentKeys";
  }
  return "UnknownError";
}

}  // namespace reidbench
