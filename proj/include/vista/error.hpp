#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vista {

enum class ErrorCode {
    EmptyInput,
    InvalidParameter,
    IoError,
    ConfigError,
    NotCanonical,
    UnknownNode,
    EmptyCandidates,
    NoCandidates,
    IncompatibleSnapshot,
    IncompleteSegment,
    MalformedOracleOutput,
    EmptyOracleOutput,
    OracleTimeout,
    OracleUnavailable,
    TemplateError,
    EvaluationError,
    DegenerateSpan,
    UnsupportedConstruct,
    ValidationExhausted,
    MissingOutcome,
    AnomalyDetected,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Errors the workflow layer may retry (oracle flakiness, malformed output,
/// execution failures of oracle-authored functions).
bool is_retryable(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace vista
