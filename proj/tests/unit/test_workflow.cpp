#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "../support/test_support.hpp"
#include "vista/workflow.hpp"

using namespace vista;
using vista::testing::code_of;
using vista::testing::linear_fleet;

namespace {

/// Stub that reports "steady" instead of "stable" speed for one vessel.
class SynonymOracle final : public Oracle {
public:
    explicit SynonymOracle(std::string vessel) : vessel_(std::move(vessel)) {}
    OracleResponse call(const OracleRequest& request) override {
        auto resp = stub_.call(request);
        if (request.id == TemplateId::BehaviorAbstraction &&
            request.variables.at("trajectory_data").find("vessel_id: " + vessel_) != std::string::npos) {
            const std::string from = "speed_pattern: stable", to = "speed_pattern: steady";
            if (auto pos = resp.raw.find(from); pos != std::string::npos) resp.raw.replace(pos, from.size(), to);
        }
        return resp;
    }

private:
    std::string vessel_;
    StubOracle stub_;
};

RunConfig config_with(std::size_t batch) {
    RunConfig c;
    c.batch_size = batch;
    return c;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("job stack pops the most recent jobs first") {
    JobStack s;
    for (std::size_t i = 0; i < 5; ++i) {
        Job j;
        j.segment_index = i;
        s.push(j);
    }
    const auto batch = s.pop_batch(3);
    REQUIRE(batch.size() == 3);
    CHECK(batch[0].segment_index == 4);
    CHECK(batch[1].segment_index == 3);
    CHECK(batch[2].segment_index == 2);
    CHECK(s.size() == 2);
    Job again;
    again.segment_index = 9;
    s.push(again);
    CHECK(s.pop_batch(10).front().segment_index == 9);
    CHECK(s.empty());
    CHECK(s.pop_batch(4).empty());

    // push_all keeps the order given: the last element is on top.
    std::vector<Job> jobs(3);
    for (std::size_t i = 0; i < 3; ++i) jobs[i].segment_index = i;
    s.push_all(jobs);
    CHECK(s.pop_batch(1).front().segment_index == 2);
}

TEST_CASE("build commits every complete segment of a clean fleet") {
    const auto fleet = linear_fleet(3, 100, 5);
    SdKg kg;
    StubOracle stub;
    const auto r = run_build(fleet, kg, config_with(4), stub, OpenWaterProvider{});
    CHECK(r.stats.scheduled == 15);
    CHECK(r.stats.committed == 15);
    CHECK(r.stats.quarantined == 0);
    CHECK(r.units.size() == 15);
    CHECK(std::is_sorted(r.units.begin(), r.units.end(), [](const KnowledgeUnit& a, const KnowledgeUnit& b) {
        return std::tie(a.vessel_id, a.segment_index) < std::tie(b.vessel_id, b.segment_index);
    }));
    CHECK(r.stats.kg_nodes == kg.node_count());
    CHECK(r.stats.kg_edges == kg.edge_count());
    for (const auto& u : r.units) {
        CHECK(u.fit.accepted);
        CHECK(u.function_id.has_value());
        CHECK_FALSE(u.function_description.empty());
    }
    CHECK(r.stats.max_concurrency <= 4);
    CHECK(r.stats.to_json().contains("stage_ms"));
}

TEST_CASE("retryable failures are retried then quarantined") {
    const auto fleet = linear_fleet(3, 100, 5);
    const std::string bad = fleet[1].vessel_id;
    SdKg kg;
    vista::testing::FailingForVessel oracle(bad, ErrorCode::OracleUnavailable);
    const auto path = temp_path("vista_quarantine_test.jsonl");
    BuildResult r;
    {
        JsonlWriter sink(path);
        r = run_build(fleet, kg, config_with(4), oracle, OpenWaterProvider{}, {&sink});
        sink.close();
    }
    CHECK(r.stats.scheduled == 15);
    CHECK(r.stats.quarantined == 5);
    CHECK(r.stats.committed == 10);
    CHECK(r.stats.scheduled == r.stats.committed + r.stats.quarantined);
    CHECK(r.stats.retried == 15);
    CHECK(oracle.failures() == 5 * 4);  // initial attempt plus three retries
    for (const auto& q : r.quarantine) {
        CHECK(q.job.vessel_id == bad);
        CHECK(q.attempts == 4);
        CHECK(q.job.attempt_log.size() == 4);
        CHECK(q.code == ErrorCode::OracleUnavailable);
    }
    const auto lines = read_lines(path);
    REQUIRE(lines.size() == 5);
    const auto first = nlohmann::json::parse(lines.front());
    CHECK(first["vessel_id"] == bad);
    CHECK(first["attempts"] == 4);
    CHECK(first["attempt_log"].size() == 4);
    std::filesystem::remove(path);

    for (const auto& u : r.units) CHECK(u.vessel_id != bad);
}

TEST_CASE("non-retryable failures are quarantined on the first attempt") {
    const auto fleet = linear_fleet(2, 40, 5);
    SdKg kg;
    vista::testing::FailingForVessel oracle(fleet[0].vessel_id, ErrorCode::TemplateError);
    const auto r = run_build(fleet, kg, config_with(2), oracle, OpenWaterProvider{});
    CHECK(r.stats.quarantined == 2);
    CHECK(r.stats.retried == 0);
    CHECK(oracle.failures() == 2);
    for (const auto& q : r.quarantine) CHECK(q.attempts == 1);

    // A zero retry limit quarantines retryable failures immediately.
    SdKg kg2;
    vista::testing::FailingForVessel flaky(fleet[0].vessel_id, ErrorCode::OracleTimeout);
    auto cfg = config_with(2);
    cfg.retry_extract = 0;
    const auto r2 = run_build(fleet, kg2, cfg, flaky, OpenWaterProvider{});
    CHECK(r2.stats.quarantined == 2);
    CHECK(flaky.failures() == 2);
}

TEST_CASE("in-flight work never exceeds the batch size") {
    const auto fleet = linear_fleet(4, 60, 9);
    for (std::size_t b : {1u, 3u, 8u}) {
        SdKg kg;
        vista::testing::DelayedOracle oracle(std::chrono::milliseconds(5));
        const auto r = run_build(fleet, kg, config_with(b), oracle, OpenWaterProvider{});
        CHECK(r.stats.max_concurrency <= b);
        CHECK(r.stats.max_concurrency >= 1);
        CHECK(r.stats.committed == 12);
    }
}

TEST_CASE("the committed graph does not depend on the batch size") {
    const auto fleet = linear_fleet(4, 80, 21);
    SdKg one, many;
    StubOracle stub;
    run_build(fleet, one, config_with(1), stub, OpenWaterProvider{});
    run_build(fleet, many, config_with(7), stub, OpenWaterProvider{});
    CHECK(one == many);
    CHECK(one.to_dot() == many.to_dot());
}

TEST_CASE("de-redundancy folds synonym tokens and never grows the graph") {
    const auto fleet = linear_fleet(3, 60, 13);
    SynonymOracle oracle(fleet[2].vessel_id);

    SdKg with_dr, without_dr;
    auto on = config_with(4);
    auto off = config_with(4);
    off.deredundancy = false;
    const auto a = run_build(fleet, with_dr, on, oracle, OpenWaterProvider{});
    const auto b = run_build(fleet, without_dr, off, oracle, OpenWaterProvider{});
    CHECK(with_dr.node_count() <= without_dr.node_count());
    CHECK(with_dr.behavior_nodes().size() < without_dr.behavior_nodes().size());
    CHECK(a.dedup.token_merges >= 1);
    CHECK(with_dr.vocabularies()[VocabKind::Speed].resolve("steady") == "stable");
    for (const auto& u : a.units) CHECK(u.behavior.speed == "stable");
    bool saw_steady = false;
    for (const auto& u : b.units) saw_steady = saw_steady || u.behavior.speed == "steady";
    CHECK(saw_steady);
}

TEST_CASE("de-redundancy merges probe-equivalent functions into the graph's representative") {
    SdKg kg;
    FunctionSpec rearranged;
    rearranged.lat_expr = "lat0 + u*(lat1 - lat0)";
    rearranged.lon_expr = "lon0 + u*(lon1 - lon0)";
    std::mt19937_64 rng(2);
    auto seed_unit = vista::testing::random_unit(rng);
    seed_unit.function = rearranged;
    seed_unit.proposed_function = rearranged;
    kg.upsert_unit(seed_unit);

    std::vector<KnowledgeUnit> units;
    for (int i = 0; i < 3; ++i) {
        auto u = vista::testing::random_unit(rng);
        u.segment_index = static_cast<std::size_t>(i);
        u.function = builtin_function(kLinear);
        u.proposed_function = u.function;
        units.push_back(u);
    }
    VocabularyStore vocabs(kg.vocabularies());
    StubOracle stub;
    const auto report = deredundancy(units, vocabs, kg, stub);
    CHECK(report.function_merges == 3);
    for (const auto& u : units) {
        CHECK(u.function.key() == rearranged.key());
        CHECK(u.proposed_function.family == kLinear);
    }

    // A second pass has nothing left to do.
    const auto before = units;
    const auto again = deredundancy(units, vocabs, kg, stub);
    CHECK(again.function_merges == 0);
    CHECK(again.token_merges == 0);
    for (std::size_t i = 0; i < units.size(); ++i) {
        CHECK(units[i].behavior == before[i].behavior);
        CHECK(units[i].function.key() == before[i].function.key());
    }
}

TEST_CASE("de-redundancy survives an unusable dedup reply") {
    std::mt19937_64 rng(4);
    std::vector<KnowledgeUnit> units{vista::testing::random_unit(rng), vista::testing::random_unit(rng)};
    SdKg kg;
    VocabularyStore vocabs;
    vista::testing::ScriptedOracle oracle;
    oracle.script[TemplateId::Dedup].push_back([](const OracleRequest&) { return std::string("no idea"); });
    const auto report = deredundancy(units, vocabs, kg, oracle);
    CHECK(report.oracle_skipped);
    CHECK_FALSE(report.warning.empty());
}

TEST_CASE("imputation fills every removed segment of a masked fleet") {
    const auto fleet = linear_fleet(3, 100, 31);
    SdKg kg;
    StubOracle stub;
    const RunConfig cfg = config_with(4);
    run_build(fleet, kg, cfg, stub, OpenWaterProvider{});

    std::vector<VesselSequence> masked = fleet;
    std::vector<ObservationMask> masks;
    std::size_t gaps = 0;
    for (auto& seq : masked) {
        auto part = partition(seq, cfg.m);
        auto applied = apply_block_missingness(part.segments, 0.4, 3);
        applied.mask.vessel_id = seq.vessel_id;
        // Keep the first and last segments so every gap has context.
        applied.mask.bits.front() = 1;
        applied.mask.bits.back() = 1;
        std::vector<AisRecord> records;
        for (std::size_t k = 0; k < part.segments.size(); ++k) {
            const auto& src = applied.mask.bits[k] ? part.segments[k] : applied.segments[k];
            records.insert(records.end(), src.records.begin(), src.records.end());
        }
        seq.records = records;
        gaps += applied.mask.gap_indices().size();
        masks.push_back(applied.mask);
    }
    REQUIRE(gaps > 0);

    const auto path = temp_path("vista_outcomes_test.jsonl");
    ImputeResult r;
    {
        JsonlWriter out(path);
        r = run_impute(masked, masks, kg, cfg, stub, OpenWaterProvider{}, {&out, nullptr});
        out.close();
    }
    CHECK(r.outcomes.size() == gaps);
    CHECK(r.stats.scheduled == gaps);
    CHECK(r.stats.committed == gaps);
    CHECK(r.stats.fallbacks == 0);
    CHECK(read_lines(path).size() == gaps);
    std::filesystem::remove(path);

    for (const auto& o : r.outcomes) {
        const auto& truth = *std::find_if(fleet.begin(), fleet.end(), [&](auto& s) { return s.vessel_id == o.vessel_id; });
        REQUIRE(o.points.size() == cfg.m);
        for (std::size_t i = 0; i < o.points.size(); ++i) {
            const auto& rec = truth.records[o.segment_index * cfg.m + i];
            CHECK(o.times[i] == rec.timestamp);
            CHECK(std::abs(o.points[i].lat - *rec.lat) < 1e-9);
            CHECK(std::abs(o.points[i].lon - *rec.lon) < 1e-9);
        }
    }

    auto stray = masks;
    stray.front().vessel_id = "nobody";
    CHECK(code_of([&] { run_impute(masked, stray, kg, cfg, stub, OpenWaterProvider{}); }) == ErrorCode::ConfigError);
}

TEST_CASE("JSON Lines writer") {
    const auto path = temp_path("vista_jsonl_test.jsonl");
    {
        JsonlWriter w(path);
        std::vector<std::thread> threads;
        for (int t = 0; t < 4; ++t)
            threads.emplace_back([&w, t] {
                for (int i = 0; i < 50; ++i) w.write({{"t", t}, {"i", i}});
            });
        for (auto& th : threads) th.join();
        w.close();
        w.close();
    }
    const auto lines = read_lines(path);
    CHECK(lines.size() == 200);
    for (const auto& l : lines) CHECK(nlohmann::json::parse(l).contains("i"));
    std::filesystem::remove(path);
    CHECK(code_of([] { JsonlWriter w("/nonexistent/dir/out.jsonl"); }) == ErrorCode::IoError);
}
