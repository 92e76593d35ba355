#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <random>

#include "../support/test_support.hpp"
#include "vista/error.hpp"
#include "vista/sdkg.hpp"

using namespace vista;
using vista::testing::BigRational;

namespace {

KnowledgeUnit unit_with(const std::string& vessel, const BehaviorTuple& b, const FunctionSpec& f) {
    std::mt19937_64 rng(1);
    KnowledgeUnit u = vista::testing::random_unit(rng);
    u.statics.vessel_id = vessel;
    u.vessel_id = vessel;
    u.behavior = b;
    u.function = f;
    u.proposed_function = f;
    return u;
}

NodeId id_of(const SdKg& kg, StaticKind k, const std::string& v) { return *kg.find_static(k, v); }

}  // namespace

TEST_CASE("upsert bumps edge weights per unit") {
    auto ex = vista::testing::example_graph();
    CHECK(ex.kg.weight(ex.nav, ex.behavior) == 6);
    CHECK(ex.kg.weight(ex.behavior, ex.function) == 6);

    // Re-assert the unit that produced the six co-occurrences.
    auto ex2 = vista::testing::example_graph();
    const auto before_rev = ex2.kg.revision();
    KnowledgeUnit u;
    u.statics = {"219000003", "under way using engine", "no additional information", "[4,6)", "[100,150)",
                 "[15,20)",   "cargo",                  "open-water"};
    u.behavior = {"stable", "gradual turn", "gradual change", "navigating", 1300};
    u.function = builtin_function(kLinear);
    u.function_description = "Description: linear path";
    ex2.kg.upsert_unit(u);
    CHECK(ex2.kg.weight(ex2.nav, ex2.behavior) == 7);
    CHECK(ex2.kg.revision() == before_rev + 1);

    // New behavior with new function starts at weight one.
    u.behavior.intent = "port approach";
    u.function = builtin_function(kCubicEase);
    const auto r = ex2.kg.upsert_unit(u);
    CHECK(ex2.kg.weight(r.behavior, r.function) == 1);
}

TEST_CASE("identical unit upserted n times gives weight n on every touched edge") {
    std::mt19937_64 rng(3);
    const KnowledgeUnit u = vista::testing::random_unit(rng);
    SdKg kg;
    SdKg::UpsertResult r;
    for (int i = 0; i < 9; ++i) r = kg.upsert_unit(u);
    CHECK(r.static_ids.size() == 8);
    for (NodeId s : r.static_ids) CHECK(kg.weight(s, r.behavior) == 9);
    CHECK(kg.weight(r.behavior, r.function) == 9);
    CHECK(kg.edge_count() == 9);
}

TEST_CASE("upsert rejects non-canonical tokens") {
    std::mt19937_64 rng(4);
    KnowledgeUnit u = vista::testing::random_unit(rng);
    u.behavior.speed = "Stable!";
    SdKg kg;
    CHECK_THROWS_AS(kg.upsert_unit(u), Error);
    try {
        kg.upsert_unit(u);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotCanonical);
    }
}

TEST_CASE("weight equals brute-force recount over a random multiset") {
    std::mt19937_64 rng(11);
    std::vector<KnowledgeUnit> units;
    for (int i = 0; i < 500; ++i) units.push_back(vista::testing::random_unit(rng));
    SdKg kg;
    for (const auto& u : units) kg.upsert_unit(u);
    for (const auto& [key, e] : kg.edges()) {
        std::uint64_t count = 0;
        if (kg.type_of(key.first) == NodeType::Static) {
            const auto& sn = kg.static_node(key.first);
            const auto& bt = kg.behavior_node(key.second).tuple;
            for (const auto& u : units)
                if (u.statics.value(sn.kind) == sn.value && u.behavior == bt) ++count;
        } else {
            const auto& bt = kg.behavior_node(key.first).tuple;
            const auto& f = kg.function_node(key.second).func;
            for (const auto& u : units)
                if (u.behavior == bt && u.function.key() == f.key()) ++count;
        }
        CHECK(e.weight == count);
    }
}

TEST_CASE("candidate behaviors follow positive static edges") {
    auto ex = vista::testing::example_graph();
    const std::vector<NodeId> q{ex.nav};
    const auto c = ex.kg.candidate_behaviors(q);
    CHECK(std::find(c.begin(), c.end(), ex.behavior) != c.end());
    CHECK(c.size() == 1);

    SdKg kg;
    auto a = unit_with("1", {"stable", "stable", "stable", "navigating", 0}, builtin_function(kLinear));
    auto b = unit_with("2", {"decreasing", "stable", "stable", "navigating", 0}, builtin_function(kLinear));
    const auto ra = kg.upsert_unit(a);
    kg.upsert_unit(a);
    const auto rb = kg.upsert_unit(b);
    const std::vector<NodeId> both{id_of(kg, StaticKind::VesselId, "1"), id_of(kg, StaticKind::VesselId, "2")};
    const auto cb = kg.candidate_behaviors(both);
    CHECK(cb == std::vector<NodeId>{ra.behavior, rb.behavior});

    const NodeId lonely = kg.upsert_static(StaticKind::ShipType, "tug");
    const std::vector<NodeId> none{lonely};
    CHECK(kg.candidate_behaviors(none).empty());
    const std::vector<NodeId> bad{9999};
    CHECK_THROWS_AS(kg.candidate_behaviors(bad), Error);
}

TEST_CASE("behavior prior matches hand evaluation") {
    SdKg kg;
    const NodeId s1 = kg.upsert_static(StaticKind::NavStatus, "moored");
    const NodeId s2 = kg.upsert_static(StaticKind::ShipType, "cargo");
    const NodeId a = kg.upsert_behavior({"stable", "stable", "stable", "moored", 0});
    const NodeId b = kg.upsert_behavior({"stable", "stable", "stable", "anchoring", 0});
    kg.add_edge(s1, a, 6);
    kg.add_edge(s2, a, 6);
    const std::vector<NodeId> q{s1, s2}, c{a, b};
    const PriorTable t = kg.behavior_prior(q, c);
    CHECK(t.exact(a) == BigRational(49, 50));
    CHECK(t.exact(b) == BigRational(1, 50));
    CHECK(t.entries[0].prior == doctest::Approx(0.98));

    const std::vector<NodeId> one{a};
    CHECK(kg.behavior_prior(q, one).exact(a) == 1);
    const std::vector<NodeId> empty;
    CHECK_THROWS_AS(kg.behavior_prior(q, empty), Error);
}

TEST_CASE("function prior mirrors the behavior prior") {
    SdKg kg;
    const NodeId b = kg.upsert_behavior({"stable", "stable", "stable", "navigating", 0});
    const NodeId f1 = kg.upsert_function(builtin_function(kLinear), "d1");
    const NodeId f2 = kg.upsert_function(builtin_function(kCubicEase), "d2");
    kg.add_edge(b, f1, 3);
    kg.add_edge(b, f2, 1);
    const auto c = kg.candidate_functions(b);
    CHECK(c == std::vector<NodeId>{f1, f2});
    const PriorTable t = kg.function_prior(b, c);
    CHECK(t.exact(f1) == BigRational(2, 3));

    auto ex = vista::testing::example_graph();
    const auto cf = ex.kg.candidate_functions(ex.behavior);
    CHECK(cf == std::vector<NodeId>{ex.function});
    CHECK(ex.kg.weight(ex.behavior, ex.function) == 6);
    CHECK(ex.kg.function_prior(ex.behavior, cf).exact(ex.function) == 1);
}

TEST_CASE("priors agree with the reference product-and-normalise routine") {
    std::mt19937_64 rng(21);
    for (int g = 0; g < 60; ++g) {
        SdKg kg = vista::testing::random_graph(rng, 50);
        std::vector<NodeId> statics;
        for (const auto& [id, n] : kg.static_nodes()) statics.push_back(id);
        if (statics.empty()) continue;
        std::shuffle(statics.begin(), statics.end(), rng);
        statics.resize(1 + rng() % std::min<std::size_t>(statics.size(), 4));
        std::sort(statics.begin(), statics.end());
        const auto cands = kg.candidate_behaviors(statics);
        if (cands.empty()) continue;
        const auto table = kg.behavior_prior(statics, cands);
        const auto ref = vista::testing::reference_prior(kg, statics, cands);
        BigRational sum = 0;
        for (NodeId c : cands) {
            CHECK(table.exact(c) == ref.at(c));
            CHECK(table.exact(c) > 0);
            sum += table.exact(c);
        }
        CHECK(sum == 1);
    }
}

TEST_CASE("top_k orders by prior then by id") {
    PriorTable t;
    t.entries = {{1, 5, 0.5}, {2, 3, 0.3}, {3, 2, 0.2}};
    t.total = 10;
    auto top = top_k(t, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].id == 1);
    CHECK(top[1].id == 2);

    PriorTable eq;
    eq.entries = {{7, 1, 0.25}, {3, 1, 0.25}, {9, 1, 0.25}, {5, 1, 0.25}};
    eq.total = 4;
    auto te = top_k(eq, 2);
    CHECK(te[0].id == 3);
    CHECK(te[1].id == 5);
    CHECK(top_k(t, 10).size() == 3);
}

TEST_CASE("induced subgraph keeps exactly the internal edges") {
    auto ex = vista::testing::example_graph();
    const std::vector<NodeId> pair{ex.nav, ex.behavior};
    const SdKg sub = ex.kg.induced_subgraph(pair);
    CHECK(sub.node_count() == 2);
    REQUIRE(sub.edge_count() == 1);
    CHECK(sub.weight(ex.nav, ex.behavior) == 6);

    const std::vector<NodeId> single{ex.function};
    CHECK(ex.kg.induced_subgraph(single).edge_count() == 0);

    std::vector<NodeId> all;
    for (const auto& [id, n] : ex.kg.static_nodes()) all.push_back(id);
    for (const auto& [id, n] : ex.kg.behavior_nodes()) all.push_back(id);
    for (const auto& [id, n] : ex.kg.function_nodes()) all.push_back(id);
    const SdKg whole = ex.kg.induced_subgraph(all);
    CHECK(whole.edges() == ex.kg.edges());

    const std::vector<NodeId> unknown{424242};
    CHECK_THROWS_AS(ex.kg.induced_subgraph(unknown), Error);
}

TEST_CASE("DOT output parses back to the same graph") {
    SdKg empty;
    CHECK(empty.to_dot() == "digraph sdkg { }\n");

    auto ex = vista::testing::example_graph();
    const std::vector<NodeId> pair{ex.nav, ex.behavior};
    const std::string dot = ex.kg.induced_subgraph(pair).to_dot();
    const std::string edge = ex.kg.dot_name(ex.nav) + " -> " + ex.kg.dot_name(ex.behavior) + " [label=\"w=6\"];";
    CHECK(dot.find(edge) != std::string::npos);
    CHECK(dot == ex.kg.induced_subgraph(pair).to_dot());

    const std::string full = ex.kg.to_dot();
    const auto parsed = vista::testing::read_dot(full);
    CHECK(parsed.nodes.size() == ex.kg.node_count());
    CHECK(parsed.edges.size() == ex.kg.edge_count());
    for (const auto& [key, e] : ex.kg.edges()) {
        const auto it = parsed.edges.find({ex.kg.dot_name(key.first), ex.kg.dot_name(key.second)});
        REQUIRE(it != parsed.edges.end());
        CHECK(it->second == "w=" + std::to_string(e.weight));
    }
}

TEST_CASE("merge_nodes folds edges and sums weights") {
    SdKg kg;
    const NodeId s = kg.upsert_static(StaticKind::NavStatus, "moored");
    const NodeId a = kg.upsert_behavior({"stable", "stable", "stable", "moored", 0});
    const NodeId b = kg.upsert_behavior({"steady", "stable", "stable", "moored", 0});
    kg.add_edge(s, a, 2);
    kg.add_edge(s, b, 3);
    kg.merge_nodes(a, b);
    CHECK(kg.weight(s, a) == 5);
    CHECK_FALSE(kg.contains(b));
    CHECK_THROWS_AS(kg.merge_nodes(a, s), Error);
}

TEST_CASE("canonicalize merges behaviors that collide after token merges") {
    SdKg kg;
    const NodeId s = kg.upsert_static(StaticKind::NavStatus, "moored");
    const NodeId a = kg.upsert_behavior({"stable", "stable", "stable", "moored", 0});
    const NodeId b = kg.upsert_behavior({"steady", "stable", "stable", "moored", 0});
    kg.add_edge(s, a, 2);
    kg.add_edge(s, b, 1);
    Vocabularies v;
    v[VocabKind::Speed].add("stable");
    v[VocabKind::Speed].add("steady");
    v[VocabKind::Speed].merge("steady", "stable");
    kg.canonicalize(v);
    CHECK(kg.behavior_nodes().size() == 1);
    CHECK(kg.weight(s, a) == 3);
}

TEST_CASE("snapshot round-trip preserves structure") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vista_sdkg_test";
    fs::create_directories(dir);

    SdKg empty;
    empty.save((dir / "empty.json").string());
    CHECK(SdKg::load((dir / "empty.json").string()) == empty);

    auto ex = vista::testing::example_graph();
    FunctionSpec custom;
    custom.lat_expr = "lat0 + (lat1 - lat0)*pow(u, k)";
    custom.lon_expr = "lon0 + (lon1 - lon0)*u";
    custom.params = {{"k", 1.5}};
    KnowledgeUnit u;
    u.statics = {"219000003", "under way using engine", "no additional information", "[4,6)", "[100,150)",
                 "[15,20)",   "cargo",                  "open-water"};
    u.behavior = {"stable", "gradual turn", "gradual change", "navigating", 1300};
    u.function = custom;
    u.function_description = "Description: eased";
    ex.kg.upsert_unit(u);
    ex.kg.save((dir / "ex.json").string());
    const SdKg back = SdKg::load((dir / "ex.json").string());
    CHECK(back == ex.kg);
    CHECK(back.weight(ex.nav, ex.behavior) == 7);

    std::mt19937_64 rng(99);
    SdKg big;
    for (int i = 0; i < 2000; ++i) big.upsert_unit(vista::testing::random_unit(rng));
    CHECK(SdKg::from_json(big.to_json()) == big);

    auto j = ex.kg.to_json();
    j["schema_version"] = 99;
    try {
        SdKg::from_json(j);
        FAIL("expected IncompatibleSnapshot");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IncompatibleSnapshot);
    }
    CHECK_THROWS_AS(SdKg::load((dir / "missing.json").string()), Error);
    fs::remove_all(dir);
}
