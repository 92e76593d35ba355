#include "vista/method_builder.hpp"

#include <fmt/format.h>

#include "vista/prompt_data.hpp"

namespace vista {

ValidationExhaustedError::ValidationExhaustedError(const std::string& message, std::vector<AttemptRecord> attempts)
    : Error(ErrorCode::ValidationExhausted, message), attempts_(std::move(attempts)) {}

const AttemptRecord* ValidationExhaustedError::best() const noexcept {
    const AttemptRecord* best = nullptr;
    for (const auto& a : attempts_)
        if (a.fit && (!best || a.fit->e_f < best->fit->e_f)) best = &a;
    return best;
}

ParsedFunction request_function(const MinimalSegment& segment, const StaticTuple& statics,
                                const BehaviorTuple& behavior, const std::string& feedback, Oracle& oracle) {
    Variables vars;
    vars["trajectory_data"] = format_trajectory_data(segment.records, &statics);
    vars["pattern"] = format_pattern(behavior);
    vars["feedback_text_description"] = feedback;
    const auto resp = call_oracle(oracle, TemplateId::MethodBuilder, std::move(vars));
    return parse_method_builder(resp.raw);
}

std::optional<RetrievedFunction> retrieve_function(const SdKg& kg, const BehaviorTuple& behavior,
                                                   const MinimalSegment& segment, double threshold) {
    const auto b = kg.find_behavior(kg.vocabularies().resolve(behavior));
    if (!b) return std::nullopt;
    const auto candidates = kg.candidate_functions(*b);
    if (candidates.empty()) return std::nullopt;
    const auto best = top_k(kg.function_prior(*b, candidates), 1);
    if (best.empty()) return std::nullopt;
    const auto& node = kg.function_node(best.front().id);
    FitReport fit;
    try {
        fit = fit_error(node.func, segment, threshold);
    } catch (const Error&) {
        return std::nullopt;
    }
    if (!fit.accepted) return std::nullopt;
    fit.attempts = 0;
    return RetrievedFunction{node.id, node.func, node.description, fit};
}

std::string feedback_text(const std::vector<AttemptRecord>& attempts, double threshold) {
    if (attempts.empty()) return {};
    std::string out = fmt::format("[FEEDBACK]\nEarlier proposals for this trajectory did not meet the fitting "
                                  "threshold e(f) <= {}:\n",
                                  threshold);
    for (const auto& a : attempts) {
        if (a.fit) {
            out += fmt::format("- attempt {}: family: {}; e(f) = {:.6g} (MAE lat {:.6g}, MAE lon {:.6g})\n", a.attempt,
                               a.func && !a.func->family.empty() ? a.func->family : "unnamed", a.fit->e_f,
                               a.fit->mae_lat, a.fit->mae_lon);
        } else {
            std::string fam;
            if (a.func && !a.func->family.empty()) fam = "family: " + a.func->family + "; ";
            out += fmt::format("- attempt {}: {}rejected ({})\n", a.attempt, fam, a.error);
        }
    }
    out += "Propose a different path model that lowers the error.\n";
    return out;
}

MethodResult validate_and_refine(const MinimalSegment& segment, const StaticTuple& statics,
                                 const BehaviorTuple& behavior, Oracle& oracle, const MethodBuilderOptions& options) {
    if (!segment.complete())
        fail(ErrorCode::IncompleteSegment,
             fmt::format("segment {} of vessel {} has missing attributes", segment.index, segment.vessel_id));
    if (options.max_proposals < 1) fail(ErrorCode::InvalidParameter, "max_proposals must be at least 1");

    std::vector<AttemptRecord> attempts;
    MethodResult result;
    for (int i = 1; i <= options.max_proposals; ++i) {
        AttemptRecord rec;
        rec.attempt = i;
        std::string description;
        ++result.oracle_calls;
        try {
            ParsedFunction pf =
                request_function(segment, statics, behavior, feedback_text(attempts, options.fit_threshold), oracle);
            rec.func = pf.func;
            description = pf.description;
            rec.fit = fit_error(pf.func, segment, options.fit_threshold);
        } catch (const Error& e) {
            const auto c = e.code();
            // Transport failures are the scheduler's business, not a failed proposal.
            if (c == ErrorCode::OracleTimeout || c == ErrorCode::OracleUnavailable || c == ErrorCode::TemplateError)
                throw;
            rec.fit.reset();
            rec.error = e.what();
        }
        if (rec.fit && rec.fit->accepted) {
            result.func = *rec.func;
            result.fit = *rec.fit;
            result.fit.attempts = i;
            result.description = description;
            return result;
        }
        attempts.push_back(std::move(rec));
    }
    throw ValidationExhaustedError(
        fmt::format("no proposal within {} attempts met e(f) <= {} for segment {} of vessel {}",
                    options.max_proposals, options.fit_threshold, segment.index, segment.vessel_id),
        std::move(attempts));
}

MethodResult propose(const MinimalSegment& segment, const StaticTuple& statics, const BehaviorTuple& behavior,
                     const SdKg* kg, Oracle& oracle, const MethodBuilderOptions& options) {
    if (kg) {
        if (auto hit = retrieve_function(*kg, behavior, segment, options.fit_threshold)) {
            MethodResult r;
            r.func = hit->func;
            r.fit = hit->fit;
            r.description = hit->description;
            r.reused = true;
            return r;
        }
    }
    return validate_and_refine(segment, statics, behavior, oracle, options);
}

std::string describe(const FunctionSpec& func, const BehaviorTuple& behavior, const std::string& existing,
                     Oracle& oracle) {
    if (!existing.empty()) return existing;
    Variables vars;
    vars["function_text"] = format_function_block(func);
    vars["pattern"] = format_pattern(behavior);
    const auto resp = call_oracle(oracle, TemplateId::FunctionDescription, std::move(vars));
    return parse_function_description(resp.raw);
}

}  // namespace vista
