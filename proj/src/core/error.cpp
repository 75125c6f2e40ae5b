#include "grounder/core/error.hpp"

namespace grounder {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kConfig: return "ConfigError";
        case ErrorCode::kIo: return "IoError";
        case ErrorCode::kNoValidJson: return "NoValidJson";
        case ErrorCode::kEmptyDescription: return "EmptyDescription";
        case ErrorCode::kValueRejected: return "ValueRejected";
        case ErrorCode::kAllEndpointsFailed: return "AllEndpointsFailed";
        case ErrorCode::kNoHealthyEndpoint: return "NoHealthyEndpoint";
        case ErrorCode::kMalformedResponse: return "MalformedResponse";
        case ErrorCode::kRequestRejected: return "RequestRejected";
        case ErrorCode::kServiceUnavailable: return "ServiceUnavailable";
        case ErrorCode::kProtocolViolation: return "ProtocolViolation";
        case ErrorCode::kStaleHandle: return "StaleHandle";
        case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
        case ErrorCode::kDetectorFailure: return "DetectorFailure";
        case ErrorCode::kTrackerFailure: return "TrackerFailure";
        case ErrorCode::kEmptyMask: return "EmptyMask";
        case ErrorCode::kDegenerateCrop: return "DegenerateCrop";
        case ErrorCode::kInconsistentInput: return "InconsistentInput";
        case ErrorCode::kEmbeddingFailure: return "EmbeddingFailure";
        case ErrorCode::kSchemaViolation: return "SchemaViolation";
        case ErrorCode::kBenchmarkFailed: return "BenchmarkFailed";
        case ErrorCode::kPortInUse: return "PortInUse";
        case ErrorCode::kFixtureInvalid: return "FixtureInvalid";
    }
    return "Unknown";
}

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return 2;
        case ErrorCode::kConfig: return 3;
        case ErrorCode::kIo: return 4;
        case ErrorCode::kNoValidJson: return 10;
        case ErrorCode::kEmptyDescription: return 11;
        case ErrorCode::kValueRejected: return 12;
        case ErrorCode::kAllEndpointsFailed: return 20;
        case ErrorCode::kNoHealthyEndpoint: return 21;
        case ErrorCode::kMalformedResponse: return 22;
        case ErrorCode::kRequestRejected: return 23;
        case ErrorCode::kServiceUnavailable: return 24;
        case ErrorCode::kProtocolViolation: return 25;
        case ErrorCode::kStaleHandle: return 26;
        case ErrorCode::kDimensionMismatch: return 27;
        case ErrorCode::kDetectorFailure: return 30;
        case ErrorCode::kTrackerFailure: return 31;
        case ErrorCode::kEmptyMask: return 32;
        case ErrorCode::kDegenerateCrop: return 33;
        case ErrorCode::kInconsistentInput: return 34;
        case ErrorCode::kEmbeddingFailure: return 35;
        case ErrorCode::kSchemaViolation: return 40;
        case ErrorCode::kBenchmarkFailed: return 41;
        case ErrorCode::kPortInUse: return 50;
        case ErrorCode::kFixtureInvalid: return 51;
    }
    return 1;
}

const std::vector<ErrorCode>& all_error_codes() {
    static const std::vector<ErrorCode> codes{
        ErrorCode::kInvalidArgument,  ErrorCode::kConfig,            ErrorCode::kIo,
        ErrorCode::kNoValidJson,      ErrorCode::kEmptyDescription,  ErrorCode::kValueRejected,
        ErrorCode::kAllEndpointsFailed, ErrorCode::kNoHealthyEndpoint, ErrorCode::kMalformedResponse,
        ErrorCode::kRequestRejected,  ErrorCode::kServiceUnavailable, ErrorCode::kProtocolViolation,
        ErrorCode::kStaleHandle,      ErrorCode::kDimensionMismatch, ErrorCode::kDetectorFailure,
        ErrorCode::kTrackerFailure,   ErrorCode::kEmptyMask,         ErrorCode::kDegenerateCrop,
        ErrorCode::kInconsistentInput, ErrorCode::kEmbeddingFailure, ErrorCode::kSchemaViolation,
        ErrorCode::kBenchmarkFailed,  ErrorCode::kPortInUse,         ErrorCode::kFixtureInvalid,
    };
    return codes;
}

}  // namespace grounder
