#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace grounder {

/// Every failure the library reports. The CLI maps each code to one exit status.
enum class ErrorCode {
    kInvalidArgument,
    kConfig,
    kIo,
    kNoValidJson,
    kEmptyDescription,
    kValueRejected,
    kAllEndpointsFailed,
    kNoHealthyEndpoint,
    kMalformedResponse,
    kRequestRejected,
    kServiceUnavailable,
    kProtocolViolation,
    kStaleHandle,
    kDimensionMismatch,
    kDetectorFailure,
    kTrackerFailure,
    kEmptyMask,
    kDegenerateCrop,
    kInconsistentInput,
    kEmbeddingFailure,
    kSchemaViolation,
    kBenchmarkFailed,
    kPortInUse,
    kFixtureInvalid,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for a failure with this code. Distinct per code; 1 and 2 are
/// reserved for unexpected failures and command-line usage errors.
int exit_code(ErrorCode code);

/// Every code, in declaration order.
const std::vector<ErrorCode>& all_error_codes();

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

/// Captured failure for slot-wise results (fan-out, per-image runs).
struct ErrorInfo {
    ErrorCode code = ErrorCode::kInvalidArgument;
    std::string message;
};

}  // namespace grounder
