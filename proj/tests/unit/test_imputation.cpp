#include "doctest.h"

#include "../support/test_support.hpp"
#include "vista/imputation.hpp"

using namespace vista;
using vista::testing::code_of;
using vista::testing::ScriptedOracle;

namespace {

ContextUnit unit_at(std::size_t index, const SdKg& kg, NodeId behavior) {
    ContextUnit u;
    u.segment_index = index;
    u.statics = {"219000003", "under way using engine", "no additional information", "[4,6)", "[100,150)",
                 "[15,20)",   "cargo",                  "open-water"};
    u.behavior = kg.behavior_node(behavior).tuple;
    return u;
}

GapInput straight_gap(const ContextPair& ctx) {
    GapInput g;
    g.vessel_id = "219000003";
    g.segment_index = 1;
    g.context = ctx;
    g.before = {{0.0, {55.0, 10.0}}, {10.0, {55.01, 10.02}}};
    g.after = {{60.0, {55.06, 10.12}}, {70.0, {55.07, 10.14}}};
    g.times = {20, 30, 40, 50};
    g.rows_text = "t,lat,lon\n";
    return g;
}

}  // namespace

TEST_CASE("extract_context finds the nearest present unit on each side") {
    std::vector<std::optional<ContextUnit>> units(5);
    units[0] = ContextUnit{0, {}, {}};
    units[3] = ContextUnit{3, {}, {}};
    auto c = extract_context(units, 1);
    CHECK(c.first->segment_index == 0);
    CHECK(c.second->segment_index == 3);
    c = extract_context(units, 4);
    CHECK(c.first->segment_index == 3);
    CHECK_FALSE(c.second.has_value());
    c = extract_context(units, 0);
    CHECK_FALSE(c.first.has_value());
    CHECK(c.second->segment_index == 3);
    c = extract_context(units, 3);
    CHECK(c.first->segment_index == 0);
    CHECK_FALSE(c.second.has_value());
}

TEST_CASE("context static ids leave the vessel id out unless asked") {
    const auto ex = vista::testing::example_graph();
    const ContextPair ctx{unit_at(0, ex.kg, ex.behavior), std::nullopt};
    const auto without_id = context_static_ids(ex.kg, ctx, false);
    const auto with_id = context_static_ids(ex.kg, ctx, true);
    CHECK(without_id.size() == 7);
    CHECK(with_id.size() == 8);
    CHECK(std::find(without_id.begin(), without_id.end(), ex.nav) != without_id.end());
    const auto vessel = *ex.kg.find_static(StaticKind::VesselId, "219000003");
    CHECK(std::find(without_id.begin(), without_id.end(), vessel) == without_id.end());
}

TEST_CASE("behavior estimation on the example graph") {
    const auto ex = vista::testing::example_graph();
    const ContextPair ctx{unit_at(0, ex.kg, ex.behavior), unit_at(2, ex.kg, ex.behavior)};
    StubOracle stub;
    const auto est = estimate_behavior(ex.kg, ctx, stub, 5);
    CHECK(est.id == ex.behavior);
    CHECK(est.tuple.intent == "navigating");
    CHECK(est.shortlist.size() == 2);
    CHECK(est.shortlist.front().id == ex.behavior);
    CHECK(est.shortlist.front().prior > est.shortlist.back().prior);
    const bool has_nav_edge = std::any_of(est.edges.begin(), est.edges.end(), [&](const Edge& e) {
        return e.src == ex.nav && e.dst == ex.behavior && e.weight == 6;
    });
    CHECK(has_nav_edge);
    CHECK_FALSE(est.graph_support.empty());

    // Top-1 shortlist holds only the strongest candidate.
    CHECK(estimate_behavior(ex.kg, ctx, stub, 1).shortlist.size() == 1);

    ScriptedOracle rogue;
    rogue.script[TemplateId::BehaviorSelect].push_back([](const OracleRequest&) {
        return format_behavior_selection({987654, "none", "none"});
    });
    CHECK(code_of([&] { estimate_behavior(ex.kg, ctx, rogue, 5); }) == ErrorCode::MalformedOracleOutput);

    CHECK(code_of([&] { estimate_behavior(ex.kg, {}, stub, 5); }) == ErrorCode::NoCandidates);
    ContextUnit stranger;
    stranger.statics = {"1", "moored", "x", "[0,2)", "[0,50)", "[0,5)", "tug", "port"};
    CHECK(code_of([&] { estimate_behavior(ex.kg, {stranger, std::nullopt}, stub, 5); }) == ErrorCode::NoCandidates);
}

TEST_CASE("method selection on the example graph") {
    const auto ex = vista::testing::example_graph();
    StubOracle stub;
    const auto m = select_method(ex.kg, ex.behavior, stub, 5, "");
    CHECK(m.id == ex.function);
    CHECK(m.func.family == kLinear);
    CHECK(m.shortlist.size() == 1);

    ScriptedOracle rogue;
    rogue.script[TemplateId::MethodSelect].push_back([](const OracleRequest&) {
        return format_method_selection({424242, "none", "none"});
    });
    CHECK(code_of([&] { select_method(ex.kg, ex.behavior, rogue, 5, ""); }) == ErrorCode::MalformedOracleOutput);
}

TEST_CASE("execute_imputation between and beyond known points") {
    const auto lin = builtin_function(kLinear);
    const std::vector<KnownPoint> before{{0, {0, 0}}}, after{{100, {1, 2}}};
    const std::vector<Timestamp> mid{25, 50};
    const auto two = execute_imputation(lin, mid, before, after);
    CHECK(two[0].lat == doctest::Approx(0.25));
    CHECK(two[1].lon == doctest::Approx(1.0));

    const std::vector<KnownPoint> tail{{0, {0, 0}}, {10, {1, 1}}};
    const std::vector<Timestamp> forward{20, 30};
    const auto fwd = execute_imputation(lin, forward, tail, {});
    CHECK(fwd[0].lat == doctest::Approx(2.0));
    CHECK(fwd[1].lon == doctest::Approx(3.0));

    const std::vector<KnownPoint> head{{100, {1, 1}}, {110, {2, 2}}};
    const std::vector<Timestamp> backward{80, 90};
    const auto bwd = execute_imputation(lin, backward, {}, head);
    CHECK(bwd[0].lat == doctest::Approx(-1.0));
    CHECK(bwd[1].lat == doctest::Approx(0.0).epsilon(1e-12));

    const std::vector<KnownPoint> single{{0, {0, 0}}};
    CHECK(code_of([&] { execute_imputation(lin, forward, single, {}); }) == ErrorCode::InvalidParameter);
    CHECK(execute_imputation(lin, {}, before, after).empty());
}

TEST_CASE("explanations may not name graph nodes") {
    const auto ex = vista::testing::example_graph();
    const ContextPair ctx{unit_at(0, ex.kg, ex.behavior), std::nullopt};
    const std::vector<NodeId> statics{ex.nav};
    StubOracle stub;
    const auto e = compose_explanation(ex.kg, ex.behavior, ex.function, statics, ctx, stub);
    CHECK_FALSE(e.regulatory_rule_cue.empty());
    CHECK_FALSE(e.operational_protocol_rationale.empty());

    ScriptedOracle leaky;
    leaky.script[TemplateId::Explain].push_back([](const OracleRequest&) {
        return format_explanation({"Rule 6", "see Movement_Pattern_3 for details"});
    });
    CHECK(code_of([&] { compose_explanation(ex.kg, ex.behavior, ex.function, statics, ctx, leaky); }) ==
          ErrorCode::MalformedOracleOutput);
}

TEST_CASE("impute_gap with graph support, one side only and fallback") {
    const auto ex = vista::testing::example_graph();
    StubOracle stub;
    const auto both = straight_gap({unit_at(0, ex.kg, ex.behavior), unit_at(2, ex.kg, ex.behavior)});
    const auto out = impute_gap(ex.kg, both, stub, {});
    CHECK_FALSE(out.fallback_used);
    CHECK(out.behavior_id == ex.behavior);
    CHECK(out.function_id == ex.function);
    REQUIRE(out.points.size() == 4);
    CHECK(out.points[0].lat == doctest::Approx(55.02));
    CHECK(out.points[3].lon == doctest::Approx(10.10));
    CHECK(out.times == both.times);

    auto left = straight_gap({unit_at(0, ex.kg, ex.behavior), std::nullopt});
    left.after.clear();
    const auto one = impute_gap(ex.kg, left, stub, {});
    CHECK_FALSE(one.fallback_used);
    CHECK(one.points[3].lat == doctest::Approx(55.05));

    const auto none = impute_gap(ex.kg, straight_gap({}), stub, {});
    CHECK(none.fallback_used);
    CHECK(none.points[0].lat == doctest::Approx(55.02));
    CHECK_FALSE(none.behavior_id.has_value());

    ContextUnit stranger;
    stranger.statics = {"1", "moored", "x", "[0,2)", "[0,50)", "[0,5)", "tug", "port"};
    CHECK(impute_gap(ex.kg, straight_gap({stranger, std::nullopt}), stub, {}).fallback_used);

    GapInput empty = straight_gap({});
    empty.before.clear();
    empty.after.clear();
    CHECK(code_of([&] { fallback_outcome(empty, "test"); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("outcome JSON round-trip") {
    const auto ex = vista::testing::example_graph();
    StubOracle stub;
    const auto out = impute_gap(ex.kg, straight_gap({unit_at(0, ex.kg, ex.behavior), std::nullopt}), stub, {});
    const auto j = to_json(out);
    CHECK(j["behavior"]["graph_edges"].is_array());
    CHECK(j["behavior"]["graph_edges"][0]["src"].get<std::string>().rfind("vessel_", 0) == 0);
    const auto back = outcome_from_json(j);
    CHECK(back.vessel_id == out.vessel_id);
    CHECK(back.segment_index == out.segment_index);
    CHECK(back.times == out.times);
    CHECK(back.behavior_id == out.behavior_id);
    CHECK(back.function_id == out.function_id);
    CHECK(back.explanation == out.explanation);
    CHECK(back.fallback_used == out.fallback_used);
    REQUIRE(back.points.size() == out.points.size());
    CHECK(back.points[2].lat == out.points[2].lat);
    CHECK(to_json(back) == j);

    const auto g = to_gap_points(back);
    CHECK(g.points.size() == 4);
    CHECK(code_of([] { outcome_from_json(nlohmann::json::object()); }) == ErrorCode::EvaluationError);
}
