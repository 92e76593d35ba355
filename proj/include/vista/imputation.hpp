#pragma once

// Knowledge-driven imputation of one gap segment: context, behavior
// estimation, method selection, execution and explanation.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "vista/ais.hpp"
#include "vista/metrics.hpp"
#include "vista/oracle.hpp"
#include "vista/sdkg.hpp"

namespace vista {

/// Static and behavior components of a complete neighboring segment.
struct ContextUnit {
    std::size_t segment_index = 0;
    StaticTuple statics;
    BehaviorTuple behavior;
    bool operator==(const ContextUnit&) const = default;
};

using ContextPair = std::pair<std::optional<ContextUnit>, std::optional<ContextUnit>>;

/// Nearest present unit before and after index k.
ContextPair extract_context(std::span<const std::optional<ContextUnit>> units, std::size_t k);

/// Static node ids of the context side(s): union of both sides' members that
/// exist in the graph. The vessel-id member joins only when requested.
std::vector<NodeId> context_static_ids(const SdKg& kg, const ContextPair& context, bool include_vessel_id);

struct BehaviorEstimate {
    NodeId id = 0;
    BehaviorTuple tuple;
    std::string graph_support;
    std::string contextual_justification;
    std::vector<PriorEntry> shortlist;
    std::vector<Edge> edges;  // query static -> selected behavior
};

/// No candidate behaviors -> NoCandidates. Selection outside the shortlist
/// -> MalformedOracleOutput.
BehaviorEstimate estimate_behavior(const SdKg& kg, const ContextPair& context, Oracle& oracle, std::size_t k,
                                   bool include_vessel_id = false);

struct MethodEstimate {
    NodeId id = 0;
    FunctionSpec func;
    std::string statistical_support;
    std::string reasoning;
    std::vector<PriorEntry> shortlist;
};

MethodEstimate select_method(const SdKg& kg, NodeId behavior, Oracle& oracle, std::size_t k,
                             const std::string& rows_text);

/// Positions for every slot time. With both boundaries present the function
/// runs between them; with one side only it extrapolates from the two nearest
/// known points on that side.
std::vector<LatLon> execute_imputation(const FunctionSpec& func, std::span<const Timestamp> times,
                                       std::span<const KnownPoint> before, std::span<const KnownPoint> after);

/// Output scanned for node names -> MalformedOracleOutput.
ParsedExplanation compose_explanation(const SdKg& kg, NodeId behavior, NodeId function,
                                      std::span<const NodeId> static_ids, const ContextPair& context,
                                      Oracle& oracle);

/// Everything one gap needs.
struct GapInput {
    std::string vessel_id;
    std::size_t segment_index = 0;
    std::vector<Timestamp> times;    // one per slot
    ContextPair context;
    std::vector<KnownPoint> before;  // up to two nearest known points, ascending time
    std::vector<KnownPoint> after;
    std::string rows_text;           // neighbor records for method selection
};

struct ImputationOutcome {
    std::string vessel_id;
    std::size_t segment_index = 0;
    std::vector<LatLon> points;
    std::vector<Timestamp> times;

    std::optional<NodeId> behavior_id;
    std::string behavior_tokens;
    std::string graph_support;
    std::string contextual_justification;
    std::vector<Edge> graph_edges;

    std::optional<NodeId> function_id;
    std::string function_iel;
    std::string statistical_support;
    std::string reasoning;

    ParsedExplanation explanation;
    bool fallback_used = false;
};

struct ImputeOptions {
    std::size_t top_k = 5;
    bool include_vessel_id = false;
};

ImputationOutcome impute_gap(const SdKg& kg, const GapInput& gap, Oracle& oracle, const ImputeOptions& options);

/// Lin-ITP between the nearest known points, flagged as fallback.
ImputationOutcome fallback_outcome(const GapInput& gap, const std::string& reason);

nlohmann::json to_json(const ImputationOutcome& outcome);
ImputationOutcome outcome_from_json(const nlohmann::json& j);
GapPoints to_gap_points(const ImputationOutcome& outcome);

}  // namespace vista
