#ifndef SEMMAP_ERROR_H_
#define SEMMAP_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace semmap {

enum class ErrorCode {
  // geom
  kNonPositiveDepth,
  kZeroDepth,
  // pnp
  kPointBehindCamera,
  kInsufficientCorrespondences,
  kDegenerateNormalEquations,
  // semantic
  kAllZeroProduct,
  kDuplicateLabel,
  kProbabilityOverflow,
  // octree
  kProbabilityOutOfRange,
  kDimensionMismatch,
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedStream,
  kCorruptNode,
  // ingest
  kMissingIndexFile,
  kUnreadableImage,
  kNoAssociations,
  kBadHeader,
  kTruncatedFile,
  kEmptyScene,
  kDegenerateWaypoints,
  kInvalidScene,
  // evaltraj
  kDegenerateConfiguration,
  kLengthMismatch,
  kTooFewAssociations,
  kBadDelta,
  // shared
  kParseError,
  kInvalidArgument,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type. The code is
// stable and meant for programmatic dispatch; the message carries context
// (file, line, frame timestamp, correspondence index).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace semmap

#endif  // SEMMAP_ERROR_H_
