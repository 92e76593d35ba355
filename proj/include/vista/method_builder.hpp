#pragma once

// Proposal, validation and description of imputation functions for one
// complete segment.

#include <optional>
#include <string>
#include <vector>

#include "vista/ais.hpp"
#include "vista/error.hpp"
#include "vista/function_spec.hpp"
#include "vista/knowledge.hpp"
#include "vista/oracle.hpp"
#include "vista/sdkg.hpp"

namespace vista {

struct MethodBuilderOptions {
    double fit_threshold = 3e-3;
    int max_proposals = 3;  // oracle proposals per segment
};

struct AttemptRecord {
    int attempt = 0;
    std::optional<FunctionSpec> func;
    std::optional<FitReport> fit;
    std::string error;  // set when the proposal could not be parsed or run
};

/// Every proposal failed validation. Carries the best attempt, if any
/// proposal could be executed at all.
class ValidationExhaustedError : public Error {
public:
    ValidationExhaustedError(const std::string& message, std::vector<AttemptRecord> attempts);

    const std::vector<AttemptRecord>& attempts() const noexcept { return attempts_; }
    /// Lowest e(f) among executable attempts.
    const AttemptRecord* best() const noexcept;

private:
    std::vector<AttemptRecord> attempts_;
};

/// One builder prompt. Feedback may be empty.
ParsedFunction request_function(const MinimalSegment& segment, const StaticTuple& statics,
                                const BehaviorTuple& behavior, const std::string& feedback, Oracle& oracle);

struct RetrievedFunction {
    NodeId id = 0;
    FunctionSpec func;
    std::string description;
    FitReport fit;
};

/// Highest-prior function already linked to `behavior`, returned only when it
/// also fits the segment.
std::optional<RetrievedFunction> retrieve_function(const SdKg& kg, const BehaviorTuple& behavior,
                                                   const MinimalSegment& segment, double threshold);

/// Diagnostic text appended to the next builder prompt.
std::string feedback_text(const std::vector<AttemptRecord>& attempts, double threshold);

struct MethodResult {
    FunctionSpec func;
    FitReport fit;
    std::string description;  // empty when the proposal carried none
    bool reused = false;      // taken from the graph without an oracle call
    int oracle_calls = 0;
};

/// Proposes up to max_proposals functions, validating each on the segment's
/// own grid. Throws ValidationExhaustedError when none is accepted.
MethodResult validate_and_refine(const MinimalSegment& segment, const StaticTuple& statics,
                                 const BehaviorTuple& behavior, Oracle& oracle, const MethodBuilderOptions& options);

/// Retrieval first, then validate_and_refine.
MethodResult propose(const MinimalSegment& segment, const StaticTuple& statics, const BehaviorTuple& behavior,
                     const SdKg* kg, Oracle& oracle, const MethodBuilderOptions& options);

/// `existing` when non-empty, otherwise one description prompt.
std::string describe(const FunctionSpec& func, const BehaviorTuple& behavior, const std::string& existing,
                     Oracle& oracle);

}  // namespace vista
