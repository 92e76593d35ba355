#pragma once

// Language-model oracle: prompt templates, strict response parsers and the
// backends (deterministic rule-based stub, OpenAI-compatible HTTP client).

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "vista/function_spec.hpp"
#include "vista/knowledge.hpp"

namespace vista {

enum class TemplateId {
    BehaviorAbstraction,
    MethodBuilder,
    BehaviorSelect,
    MethodSelect,
    Explain,
    Dedup,
    FunctionDescription,
};

std::string_view to_string(TemplateId id) noexcept;
TemplateId template_id_from_string(std::string_view text);

inline constexpr int kTemplateVersion = 1;

/// Template body with {name} placeholders.
std::string_view template_text(TemplateId id);
/// Placeholder names in order of first appearance.
std::vector<std::string> template_placeholders(TemplateId id);

using Variables = std::map<std::string, std::string>;

/// Single-pass substitution. Unbound or unknown variables -> TemplateError.
std::string render(TemplateId id, const Variables& vars);

struct OracleRequest {
    TemplateId id = TemplateId::BehaviorAbstraction;
    Variables variables;
    bool deterministic = true;
};

struct OracleResponse {
    std::string raw;
    double latency_ms = 0.0;
};

class Oracle {
public:
    virtual ~Oracle() = default;
    /// Safe for concurrent invocation.
    virtual OracleResponse call(const OracleRequest& request) = 0;
};

/// Deterministic rule-based backend; a pure function of the request.
class StubOracle final : public Oracle {
public:
    OracleResponse call(const OracleRequest& request) override;
};

struct HttpOracleOptions {
    std::string url;  // e.g. http://host:port/v1/chat/completions
    std::string api_key;
    std::string model = "default";
    std::chrono::milliseconds timeout{60'000};
    int max_in_flight = 8;
    bool thinking = false;  // forwarded as "enable_thinking"

    /// VISTA_ORACLE_URL, VISTA_ORACLE_KEY, VISTA_ORACLE_MODEL. Missing URL ->
    /// ConfigError.
    static HttpOracleOptions from_env();
};

class HttpOracle final : public Oracle {
public:
    explicit HttpOracle(HttpOracleOptions options);
    OracleResponse call(const OracleRequest& request) override;

private:
    HttpOracleOptions opts_;
    std::string scheme_host_port_;
    std::string path_;
    std::counting_semaphore<1024> in_flight_;
};

/// Per-template backend override with a default backend.
class RoutingOracle final : public Oracle {
public:
    explicit RoutingOracle(std::shared_ptr<Oracle> fallback) : default_(std::move(fallback)) {}
    void route(TemplateId id, std::shared_ptr<Oracle> backend) { routes_[id] = std::move(backend); }
    OracleResponse call(const OracleRequest& request) override;

private:
    std::shared_ptr<Oracle> default_;
    std::map<TemplateId, std::shared_ptr<Oracle>> routes_;
};

// --- parsed responses -------------------------------------------------------

struct ParsedPattern {
    std::string speed, course, heading, intent;  // canonical tokens
    std::string speed_note, course_note, heading_note, intent_note;
};

struct ParsedFunction {
    FunctionSpec func;
    std::string description;
};

struct ParsedBehaviorSelection {
    NodeId selected = 0;
    std::string graph_support;
    std::string contextual_justification;
    bool operator==(const ParsedBehaviorSelection&) const = default;
};

struct ParsedMethodSelection {
    NodeId selected = 0;
    std::string statistical_support;
    std::string reasoning;
    bool operator==(const ParsedMethodSelection&) const = default;
};

struct ParsedExplanation {
    std::string regulatory_rule_cue;
    std::string operational_protocol_rationale;
    bool operator==(const ParsedExplanation&) const = default;
};

struct MergeGroup {
    std::string primary;
    std::vector<std::string> redundant;
    bool operator==(const MergeGroup&) const = default;
};

struct ParsedDedup {
    std::map<std::string, std::vector<MergeGroup>> behavior;  // attribute -> groups
    std::vector<std::string> behavior_keep;
    std::vector<MergeGroup> functions;
    std::vector<std::string> function_keep;
    bool operator==(const ParsedDedup&) const = default;
};

/// Text between the first pair of ''' (or ```) fences. Missing fences ->
/// MalformedOracleOutput; blank response -> EmptyOracleOutput.
std::string extract_block(std::string_view raw);

ParsedPattern parse_behavior_abstraction(std::string_view raw);
/// Missing lat/lon lines -> MalformedOracleOutput; IEL failures ->
/// UnsupportedConstruct.
ParsedFunction parse_method_builder(std::string_view raw);
ParsedBehaviorSelection parse_behavior_selection(std::string_view raw);
ParsedMethodSelection parse_method_selection(std::string_view raw);
ParsedExplanation parse_explanation(std::string_view raw);
ParsedDedup parse_dedup(std::string_view raw);
std::string parse_function_description(std::string_view raw);

std::string format_behavior_abstraction(const ParsedPattern& p);
std::string format_method_builder(const ParsedFunction& f);
std::string format_behavior_selection(const ParsedBehaviorSelection& p);
std::string format_method_selection(const ParsedMethodSelection& p);
std::string format_explanation(const ParsedExplanation& p);
std::string format_dedup(const ParsedDedup& p);

/// Calls `oracle` and rejects blank output with EmptyOracleOutput.
OracleResponse call_oracle(Oracle& oracle, TemplateId id, Variables vars);

}  // namespace vista
