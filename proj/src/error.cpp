#include "vista/error.hpp"

namespace vista {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::NotCanonical: return "NotCanonical";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::EmptyCandidates: return "EmptyCandidates";
        case ErrorCode::NoCandidates: return "NoCandidates";
        case ErrorCode::IncompatibleSnapshot: return "IncompatibleSnapshot";
        case ErrorCode::IncompleteSegment: return "IncompleteSegment";
        case ErrorCode::MalformedOracleOutput: return "MalformedOracleOutput";
        case ErrorCode::EmptyOracleOutput: return "EmptyOracleOutput";
        case ErrorCode::OracleTimeout: return "OracleTimeout";
        case ErrorCode::OracleUnavailable: return "OracleUnavailable";
        case ErrorCode::TemplateError: return "TemplateError";
        case ErrorCode::EvaluationError: return "EvaluationError";
        case ErrorCode::DegenerateSpan: return "DegenerateSpan";
        case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
        case ErrorCode::ValidationExhausted: return "ValidationExhausted";
        case ErrorCode::MissingOutcome: return "MissingOutcome";
        case ErrorCode::AnomalyDetected: return "AnomalyDetected";
    }
    return "Unknown";
}

bool is_retryable(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedOracleOutput:
        case ErrorCode::EmptyOracleOutput:
        case ErrorCode::OracleTimeout:
        case ErrorCode::OracleUnavailable:
        case ErrorCode::EvaluationError:
        case ErrorCode::UnsupportedConstruct:
        case ErrorCode::ValidationExhausted:
        case ErrorCode::AnomalyDetected:
            return true;
        default:
            return false;
    }
}

}  // namespace vista
