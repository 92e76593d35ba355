#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "../support/test_support.hpp"
#include "vista/ais.hpp"
#include "vista/error.hpp"

using namespace vista;

namespace {

using vista::testing::code_of;

VesselSequence track(std::size_t n) {
    return generate_synthetic_track(TrackKind::ConstantVelocity, n);
}

}  // namespace

TEST_CASE("partition yields floor(T/m) segments and drops the remainder") {
    const auto p = partition(track(47), 10);
    CHECK(p.segments.size() == 4);
    CHECK(p.remainder == 7);
    CHECK(p.segments[2].index == 2);
    CHECK(p.segments[2].records.front().timestamp == track(47).records[20].timestamp);
    for (const auto& s : p.segments) CHECK(s.size() == 10);

    CHECK(partition(track(9), 10).segments.empty());
    CHECK(code_of([] { partition(VesselSequence{"1", {}}, 10); }) == ErrorCode::EmptyInput);
    CHECK(code_of([] { partition(track(10), 1); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("mask bit is set only when every record of the segment is complete") {
    auto seq = track(40);
    seq.records[25].draught.reset();
    const auto p = partition(seq, 10);
    const auto mask = compute_mask(p.segments);
    CHECK(mask.bits == std::vector<std::uint8_t>{1, 1, 0, 1});
    // Missing a static attribute is incomplete but not a removal gap.
    CHECK(mask.gap_indices().empty());
}

TEST_CASE("block missingness removes whole segments reproducibly") {
    const auto p = partition(track(400), 20);
    const auto none = apply_block_missingness(p.segments, 0.0, 7);
    CHECK(std::all_of(none.mask.bits.begin(), none.mask.bits.end(), [](auto b) { return b == 1; }));

    const auto all = apply_block_missingness(p.segments, 1.0, 7);
    CHECK(all.mask.gap_indices().size() == p.segments.size());
    for (const auto& s : all.segments) {
        CHECK(s.removed());
        for (const auto& r : s.records) {
            CHECK_FALSE(r.speed.has_value());
            CHECK_FALSE(r.nav_status.has_value());
            CHECK(r.vessel_id == s.vessel_id);
        }
    }

    const auto a = apply_block_missingness(p.segments, 0.2, 7);
    const auto b = apply_block_missingness(p.segments, 0.2, 7);
    CHECK(a.mask == b.mask);
    CHECK(a.mask.seed == 7);
    CHECK(code_of([&] { apply_block_missingness(p.segments, 1.5, 7); }) == ErrorCode::InvalidParameter);

    // Removal frequency over many segments stays near the probability.
    const auto many = partition(track(20000), 20);
    const auto m = apply_block_missingness(many.segments, 0.2, 11);
    const double rate = static_cast<double>(m.mask.gap_indices().size()) / static_cast<double>(many.segments.size());
    CHECK(rate == doctest::Approx(0.2).epsilon(0.25));
}

TEST_CASE("unit_uniform maps draws into [0,1)") {
    CHECK(unit_uniform(0) == 0.0);
    CHECK(unit_uniform(~0ULL) < 1.0);
    CHECK(unit_uniform(1ULL << 63) == 0.5);
}

TEST_CASE("synthetic constant-turn track follows the analytic arc") {
    SyntheticTrackParams p;
    p.turn_rate = 0.05;
    p.velocity = {0.001, 0.0};
    const auto seq = generate_synthetic_track(TrackKind::ConstantTurn, 50, p);
    // Independent check: the position is the integral of the rotating velocity.
    for (std::size_t i = 0; i < seq.records.size(); i += 7) {
        const double t = static_cast<double>(i);
        const double lat = p.start.lat + p.velocity.lat * std::sin(p.turn_rate * t) / p.turn_rate;
        const double lon = p.start.lon + p.velocity.lat * (1 - std::cos(p.turn_rate * t)) / p.turn_rate;
        CHECK(*seq.records[i].lat == doctest::Approx(lat).epsilon(1e-12));
        CHECK(*seq.records[i].lon == doctest::Approx(lon).epsilon(1e-12));
    }
    CHECK_NOTHROW(seq.validate());
    CHECK(code_of([] { generate_synthetic_track(TrackKind::ConstantVelocity, 1); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("record and sequence validation") {
    auto seq = track(5);
    seq.records[3].timestamp = seq.records[2].timestamp;
    CHECK(code_of([&] { seq.validate(); }) == ErrorCode::InvalidParameter);
    AisRecord r;
    r.vessel_id = "1";
    r.lat = 91;
    CHECK(code_of([&] { r.validate(); }) == ErrorCode::InvalidParameter);
    CHECK(code_of([&] { (void)r.position(); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("CSV round-trip keeps absent cells absent") {
    auto seq = track(6);
    seq.records[2].heading.reset();
    seq.records[4].cargo_type.reset();
    std::stringstream io;
    write_ais_csv(io, {seq});
    const auto back = read_ais_csv(io);
    REQUIRE(back.size() == 1);
    REQUIRE(back[0].records.size() == 6);
    CHECK_FALSE(back[0].records[2].heading.has_value());
    CHECK_FALSE(back[0].records[4].cargo_type.has_value());
    CHECK(*back[0].records[1].lat == doctest::Approx(*seq.records[1].lat).epsilon(1e-12));
    CHECK(back[0].records[5].timestamp == seq.records[5].timestamp);
}

TEST_CASE("CSV reader groups by vessel in order of appearance, sorts by time and parses ISO timestamps") {
    std::stringstream in(
        "mmsi,timestamp,lat,lon,sog,cog,heading,nav_status,cargo_type,draught,length,width,ship_type\n"
        "2,2024-01-01T00:00:10Z,55,10,1,2,3,moored,x,5,100,20,cargo\n"
        "1,2024-01-01T00:00:00Z,54,9,,,,,,,,,\n"
        "2,2024-01-01T00:00:00Z,55,10,1,2,3,moored,x,5,100,20,cargo\n");
    const auto seqs = read_ais_csv(in);
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[0].vessel_id == "2");
    CHECK(seqs[1].vessel_id == "1");
    REQUIRE(seqs[0].records.size() == 2);
    CHECK(seqs[0].records[0].timestamp == 1704067200);
    CHECK(seqs[0].records[1].timestamp == 1704067210);
    CHECK(parse_timestamp("1704067200") == 1704067200);
    CHECK_THROWS_AS(parse_timestamp("yesterday"), Error);

    std::stringstream bad("mmsi,timestamp\n1,2\n");
    CHECK_THROWS_AS(read_ais_csv(bad), Error);
    CHECK(code_of([] { read_ais_csv_file("/nonexistent/x.csv"); }) == ErrorCode::IoError);
}

TEST_CASE("mask file round-trip restores the evaluation flags") {
    const auto p = partition(track(100), 20);
    auto masked = apply_block_missingness(p.segments, 0.5, 3);
    masked.mask.vessel_id = "219000001";
    const auto text = masks_to_json({masked.mask});
    const auto back = masks_from_json(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].bits == masked.mask.bits);
    CHECK(back[0].gap_indices() == masked.mask.gap_indices());
    CHECK(back[0].seed == masked.mask.seed);

    CHECK(code_of([] { masks_from_json("{not json"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { masks_from_json(R"([{"vessel_id":"1","m":20,"bits":[1],"removed":[0]}])"); }) ==
          ErrorCode::ConfigError);

    const auto path = (std::filesystem::temp_directory_path() / "vista_mask_test.json").string();
    write_masks_file(path, {masked.mask});
    CHECK(read_masks_file(path).front().bits == masked.mask.bits);
    std::filesystem::remove(path);
    CHECK(code_of([] { read_masks_file("/nonexistent/mask.json"); }) == ErrorCode::IoError);
}
