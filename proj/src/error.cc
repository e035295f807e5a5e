#include "semmap/error.h"

namespace semmap {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kZeroDepth: return "ZeroDepth";
    case ErrorCode::kPointBehindCamera: return "PointBehindCamera";
    case ErrorCode::kInsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorCode::kDegenerateNormalEquations: return "DegenerateNormalEquations";
    case ErrorCode::kAllZeroProduct: return "AllZeroProduct";
    case ErrorCode::kDuplicateLabel: return "DuplicateLabel";
    case ErrorCode::kProbabilityOverflow: return "ProbabilityOverflow";
    case ErrorCode::kProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedStream: return "TruncatedStream";
    case ErrorCode::kCorruptNode: return "CorruptNode";
    case ErrorCode::kMissingIndexFile: return "MissingIndexFile";
    case ErrorCode::kUnreadableImage: return "UnreadableImage";
    case ErrorCode::kNoAssociations: return "NoAssociations";
    case ErrorCode::kBadHeader: return "BadHeader";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kEmptyScene: return "EmptyScene";
    case ErrorCode::kDegenerateWaypoints: return "DegenerateWaypoints";
    case ErrorCode::kInvalidScene: return "InvalidScene";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooFewAssociations: return "TooFewAssociations";
    case ErrorCode::kBadDelta: return "BadDelta";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace semmap
