#include "vista/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "vista/error.hpp"
#include "vista/prompt_data.hpp"

namespace vista {

namespace {

std::string boundary_text(const ContextPair& ctx) {
    return fmt::format("before: {}\nafter: {}", ctx.first ? format_pattern(ctx.first->behavior) : "absent",
                       ctx.second ? format_pattern(ctx.second->behavior) : "absent");
}

bool in_shortlist(const std::vector<PriorEntry>& shortlist, NodeId id) {
    return std::any_of(shortlist.begin(), shortlist.end(), [&](const PriorEntry& e) { return e.id == id; });
}

std::vector<NodeId> ids_of(const std::vector<PriorEntry>& entries) {
    std::vector<NodeId> out;
    for (const auto& e : entries) out.push_back(e.id);
    return out;
}

}  // namespace

ContextPair extract_context(std::span<const std::optional<ContextUnit>> units, std::size_t k) {
    ContextPair out;
    for (std::size_t i = std::min(k, units.size()); i-- > 0;)
        if (units[i]) {
            out.first = units[i];
            break;
        }
    for (std::size_t i = k + 1; i < units.size(); ++i)
        if (units[i]) {
            out.second = units[i];
            break;
        }
    return out;
}

std::vector<NodeId> context_static_ids(const SdKg& kg, const ContextPair& context, bool include_vessel_id) {
    std::set<NodeId> ids;
    for (const auto* side : {&context.first, &context.second}) {
        if (!*side) continue;
        for (const auto& m : (*side)->statics.members()) {
            if (m.kind == StaticKind::VesselId && !include_vessel_id) continue;
            if (auto id = kg.find_static(m.kind, m.value)) ids.insert(*id);
        }
    }
    return {ids.begin(), ids.end()};
}

BehaviorEstimate estimate_behavior(const SdKg& kg, const ContextPair& context, Oracle& oracle, std::size_t k,
                                   bool include_vessel_id) {
    if (!context.first && !context.second) fail(ErrorCode::NoCandidates, "no context on either side of the gap");
    const auto statics = context_static_ids(kg, context, include_vessel_id);
    const auto candidates = kg.candidate_behaviors(statics);
    if (candidates.empty()) fail(ErrorCode::NoCandidates, "no behavior linked to the context attributes");
    const auto priors = kg.behavior_prior(statics, candidates);
    const auto shortlist = top_k(priors, k);

    std::vector<NodeId> nodes = statics;
    for (const auto& e : shortlist) nodes.push_back(e.id);
    const SdKg sub = kg.induced_subgraph(nodes);

    std::string movement_text;
    for (const auto& e : shortlist) {
        const auto& b = kg.behavior_node(e.id).tuple;
        std::string edges;
        for (NodeId s : statics)
            if (const auto w = kg.weight(s, e.id); w > 0)
                edges += fmt::format("{}{} -> {} (w={})", edges.empty() ? "" : ", ", kg.dot_name(s), kg.dot_name(e.id), w);
        movement_text += fmt::format(
            "{}: speed={}; course={}; heading={}; intent={}; duration={}; support={}; prior={:.6f}; edges={}\n",
            kg.dot_name(e.id), b.speed, b.course, b.heading, b.intent, duration_label(b.duration_bin), e.support.str(),
            e.prior, edges.empty() ? "none" : edges);
    }
    std::string context_vessels;
    for (NodeId s : statics) {
        const auto& n = kg.static_node(s);
        context_vessels += fmt::format("{}: {} = {}\n", kg.dot_name(s), to_string(n.kind), n.value);
    }
    Variables vars;
    vars["top_k"] = std::to_string(k);
    vars["boundary_text"] = boundary_text(context);
    vars["dot_text"] = sub.to_dot();
    vars["movement_text"] = movement_text;
    vars["context_vessels"] = context_vessels.empty() ? "none\n" : context_vessels;
    const auto resp = call_oracle(oracle, TemplateId::BehaviorSelect, std::move(vars));
    const auto sel = parse_behavior_selection(resp.raw);
    if (!in_shortlist(shortlist, sel.selected))
        fail(ErrorCode::MalformedOracleOutput,
             fmt::format("selected movement {} is not among the {} shortlisted candidates", sel.selected, shortlist.size()));

    BehaviorEstimate est;
    est.id = sel.selected;
    est.tuple = kg.behavior_node(sel.selected).tuple;
    est.graph_support = sel.graph_support;
    est.contextual_justification = sel.contextual_justification;
    est.shortlist = shortlist;
    for (NodeId s : statics)
        if (const auto w = sub.weight(s, sel.selected); w > 0)
            est.edges.push_back({s, sel.selected, w, EdgeKind::StaticBehavior});
    return est;
}

MethodEstimate select_method(const SdKg& kg, NodeId behavior, Oracle& oracle, std::size_t k,
                             const std::string& rows_text) {
    const auto candidates = kg.candidate_functions(behavior);
    if (candidates.empty()) fail(ErrorCode::NoCandidates, "selected behavior has no linked function");
    const auto priors = kg.function_prior(behavior, candidates);
    const auto shortlist = top_k(priors, k);

    std::vector<NodeId> nodes = ids_of(shortlist);
    nodes.push_back(behavior);
    const SdKg sub = kg.induced_subgraph(nodes);

    std::string functions_text;
    for (const auto& e : shortlist) {
        const auto& f = kg.function_node(e.id);
        std::string desc = f.description;
        std::replace(desc.begin(), desc.end(), '\n', ' ');
        functions_text += fmt::format("{}: family={}; weight={}; support={}; prior={:.6f}; description={}\n",
                                      kg.dot_name(e.id), f.func.family.empty() ? "custom" : f.func.family,
                                      kg.weight(behavior, e.id), e.support.str(), e.prior, desc);
    }
    Variables vars;
    vars["dot_text"] = sub.to_dot();
    vars["functions_text"] = functions_text;
    vars["movement_text"] = format_pattern(kg.behavior_node(behavior).tuple);
    vars["rows_text"] = rows_text.empty() ? "none\n" : rows_text;
    const auto resp = call_oracle(oracle, TemplateId::MethodSelect, std::move(vars));
    const auto sel = parse_method_selection(resp.raw);
    if (!in_shortlist(shortlist, sel.selected))
        fail(ErrorCode::MalformedOracleOutput,
             fmt::format("selected function {} is not among the {} shortlisted candidates", sel.selected, shortlist.size()));
    MethodEstimate est;
    est.id = sel.selected;
    est.func = kg.function_node(sel.selected).func;
    est.statistical_support = sel.statistical_support;
    est.reasoning = sel.reasoning;
    est.shortlist = shortlist;
    return est;
}

std::vector<LatLon> execute_imputation(const FunctionSpec& func, std::span<const Timestamp> times,
                                       std::span<const KnownPoint> before, std::span<const KnownPoint> after) {
    if (times.empty()) return {};
    if (!before.empty() && !after.empty()) {
        const KnownPoint& a = before.back();
        const KnownPoint& b = after.front();
        std::vector<double> offsets{0.0};
        for (Timestamp t : times) offsets.push_back(static_cast<double>(t) - a.t);
        offsets.push_back(b.t - a.t);
        return execute(func, a.p, b.p, offsets);
    }
    const auto side = before.empty() ? after : before;
    if (side.size() < 2)
        fail(ErrorCode::InvalidParameter, "one-sided imputation needs two known points on the available side");
    const KnownPoint& a = before.empty() ? side[0] : side[side.size() - 2];
    const KnownPoint& b = before.empty() ? side[1] : side[side.size() - 1];
    const double dt = b.t - a.t;
    if (!(dt > 0.0)) fail(ErrorCode::DegenerateSpan, "anchor points share a timestamp");
    const CompiledFunction f(func);
    std::vector<LatLon> out;
    out.reserve(times.size());
    for (Timestamp t : times) {
        const LatLon p = f.at((static_cast<double>(t) - a.t) / dt, a.p, b.p, dt);
        if (!std::isfinite(p.lat) || !std::isfinite(p.lon))
            fail(ErrorCode::EvaluationError, "function produced a non-finite position");
        out.push_back(p);
    }
    return out;
}

ParsedExplanation compose_explanation(const SdKg& kg, NodeId behavior, NodeId function,
                                      std::span<const NodeId> static_ids, const ContextPair& context,
                                      Oracle& oracle) {
    std::vector<NodeId> nodes(static_ids.begin(), static_ids.end());
    nodes.push_back(behavior);
    nodes.push_back(function);
    const SdKg sub = kg.induced_subgraph(nodes);

    const auto& fn = kg.function_node(function);
    std::string function_desc = format_function_block(fn.func);
    if (!fn.description.empty()) function_desc += "description: " + fn.description + "\n";

    std::set<std::string> lines;
    std::string vessels;
    for (const auto* side : {&context.first, &context.second}) {
        if (!*side) continue;
        for (const auto& m : (*side)->statics.members()) {
            if (m.kind == StaticKind::VesselId) continue;
            std::string line = fmt::format("{}: {}", to_string(m.kind), m.value);
            if (lines.insert(line).second) vessels += line + "\n";
        }
    }
    std::string patterns;
    if (context.first) patterns += "before the gap: " + behavior_label(context.first->behavior) + "\n";
    if (context.second) patterns += "after the gap: " + behavior_label(context.second->behavior) + "\n";

    Variables vars;
    vars["dot_text"] = sub.to_dot();
    vars["movement_desc"] = behavior_label(kg.behavior_node(behavior).tuple);
    vars["function_desc"] = function_desc;
    vars["vessels_desc_block"] = vessels.empty() ? "none\n" : vessels;
    vars["vessels_behavior_pattern"] = patterns.empty() ? "none\n" : patterns;
    const auto resp = call_oracle(oracle, TemplateId::Explain, std::move(vars));
    ParsedExplanation e = parse_explanation(resp.raw);
    static const std::regex node_name(kNodeNamePattern);
    for (const std::string* field : {&e.regulatory_rule_cue, &e.operational_protocol_rationale}) {
        std::smatch m;
        if (std::regex_search(*field, m, node_name))
            fail(ErrorCode::MalformedOracleOutput, "explanation mentions node " + m.str());
    }
    return e;
}

ImputationOutcome fallback_outcome(const GapInput& gap, const std::string& reason) {
    std::vector<KnownPoint> known = gap.before;
    known.insert(known.end(), gap.after.begin(), gap.after.end());
    if (known.empty())
        fail(ErrorCode::InvalidParameter,
             fmt::format("vessel {} has no known position to impute segment {} from", gap.vessel_id, gap.segment_index));
    std::vector<double> t;
    for (Timestamp ts : gap.times) t.push_back(static_cast<double>(ts));
    ImputationOutcome out;
    out.vessel_id = gap.vessel_id;
    out.segment_index = gap.segment_index;
    out.times = gap.times;
    out.points = lin_itp_track(known, t).points;
    out.fallback_used = true;
    out.behavior_tokens = "unknown";
    out.graph_support = "none (" + reason + ")";
    out.contextual_justification = "fallback: linear interpolation between the nearest known positions";
    out.function_iel = format_function_block(builtin_function(kLinear));
    out.statistical_support = "none (fallback)";
    out.reasoning = "fallback: the knowledge graph could not serve this gap";
    out.explanation.regulatory_rule_cue = "Undetermined";
    out.explanation.operational_protocol_rationale =
        "Fallback imputation: no stored knowledge matched the surrounding context (" + reason +
        "), so positions were linearly interpolated between the nearest known observations.";
    return out;
}

ImputationOutcome impute_gap(const SdKg& kg, const GapInput& gap, Oracle& oracle, const ImputeOptions& options) {
    if (!gap.context.first && !gap.context.second) return fallback_outcome(gap, "no complete neighboring segment");
    const bool one_sided = gap.before.empty() || gap.after.empty();
    if (one_sided && (gap.before.size() + gap.after.size()) < 2)
        return fallback_outcome(gap, "too few known positions for extrapolation");
    BehaviorEstimate b;
    MethodEstimate f;
    try {
        b = estimate_behavior(kg, gap.context, oracle, options.top_k, options.include_vessel_id);
        f = select_method(kg, b.id, oracle, options.top_k, gap.rows_text);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NoCandidates) return fallback_outcome(gap, e.what());
        throw;
    }
    ImputationOutcome out;
    out.vessel_id = gap.vessel_id;
    out.segment_index = gap.segment_index;
    out.times = gap.times;
    out.points = execute_imputation(f.func, gap.times, gap.before, gap.after);
    out.behavior_id = b.id;
    out.behavior_tokens = behavior_label(b.tuple);
    out.graph_support = b.graph_support;
    out.contextual_justification = b.contextual_justification;
    out.graph_edges = b.edges;
    out.function_id = f.id;
    out.function_iel = format_function_block(f.func);
    out.statistical_support = f.statistical_support;
    out.reasoning = f.reasoning;
    const auto statics = context_static_ids(kg, gap.context, options.include_vessel_id);
    out.explanation = compose_explanation(kg, b.id, f.id, statics, gap.context, oracle);
    return out;
}

// --- JSON --------------------------------------------------------------------

nlohmann::json to_json(const ImputationOutcome& o) {
    nlohmann::ordered_json j;
    j["vessel_id"] = o.vessel_id;
    j["segment_index"] = o.segment_index;
    auto pts = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < o.points.size(); ++i)
        pts.push_back({o.points[i].lat, o.points[i].lon, i < o.times.size() ? o.times[i] : 0});
    j["points"] = pts;
    auto edges = nlohmann::ordered_json::array();
    for (const auto& e : o.graph_edges)
        edges.push_back({{"src", fmt::format("vessel_{}", e.src)},
                         {"dst", fmt::format("Movement_Pattern_{}", e.dst)},
                         {"w", e.weight}});
    j["behavior"] = {{"id", o.behavior_id ? nlohmann::ordered_json(*o.behavior_id) : nlohmann::ordered_json(nullptr)},
                     {"tokens", o.behavior_tokens},
                     {"graph_support", o.graph_support},
                     {"graph_edges", edges},
                     {"contextual_justification", o.contextual_justification}};
    j["function"] = {{"id", o.function_id ? nlohmann::ordered_json(*o.function_id) : nlohmann::ordered_json(nullptr)},
                     {"iel", o.function_iel},
                     {"statistical_support", o.statistical_support},
                     {"reasoning", o.reasoning}};
    j["explanation"] = {{"regulatory_rule_cue", o.explanation.regulatory_rule_cue},
                        {"operational_protocol_rationale", o.explanation.operational_protocol_rationale}};
    j["fallback_used"] = o.fallback_used;
    return nlohmann::json::parse(j.dump());
}

ImputationOutcome outcome_from_json(const nlohmann::json& j) {
    ImputationOutcome o;
    try {
        o.vessel_id = j.at("vessel_id").get<std::string>();
        o.segment_index = j.at("segment_index").get<std::size_t>();
        for (const auto& p : j.at("points")) {
            o.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            o.times.push_back(p.at(2).get<Timestamp>());
        }
        const auto& b = j.at("behavior");
        if (!b.at("id").is_null()) o.behavior_id = b["id"].get<NodeId>();
        o.behavior_tokens = b.value("tokens", "");
        o.graph_support = b.value("graph_support", "");
        o.contextual_justification = b.value("contextual_justification", "");
        if (b.contains("graph_edges"))
            for (const auto& e : b["graph_edges"]) {
                const auto src = e.at("src").get<std::string>();
                const auto dst = e.at("dst").get<std::string>();
                o.graph_edges.push_back({std::stoull(src.substr(src.rfind('_') + 1)),
                                         std::stoull(dst.substr(dst.rfind('_') + 1)), e.at("w").get<std::uint64_t>(),
                                         EdgeKind::StaticBehavior});
            }
        const auto& f = j.at("function");
        if (!f.at("id").is_null()) o.function_id = f["id"].get<NodeId>();
        o.function_iel = f.value("iel", "");
        o.statistical_support = f.value("statistical_support", "");
        o.reasoning = f.value("reasoning", "");
        const auto& e = j.at("explanation");
        o.explanation.regulatory_rule_cue = e.value("regulatory_rule_cue", "");
        o.explanation.operational_protocol_rationale = e.value("operational_protocol_rationale", "");
        o.fallback_used = j.at("fallback_used").get<bool>();
    } catch (const std::exception& e) {
        fail(ErrorCode::EvaluationError, std::string("malformed outcome record: ") + e.what());
    }
    return o;
}

GapPoints to_gap_points(const ImputationOutcome& o) {
    return {o.vessel_id, o.segment_index, o.points, o.times};
}

}  // namespace vista
