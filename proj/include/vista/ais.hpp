#pragma once

// AIS records, per-vessel sequences, fixed-length minimal segments and the
// segment-level observation mask.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vista {

using Timestamp = std::int64_t;  // UTC epoch seconds

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

/// One AIS message. Vessel id and timestamp are always present; every other
/// attribute carries its own presence flag through std::optional.
struct AisRecord {
    std::string vessel_id;
    Timestamp timestamp = 0;
    std::optional<double> lat;
    std::optional<double> lon;
    std::optional<double> heading;  // degrees [0,360)
    std::optional<double> course;   // degrees [0,360)
    std::optional<double> speed;    // knots
    std::optional<std::string> nav_status;
    std::optional<std::string> cargo_type;
    std::optional<double> draught;  // metres
    std::optional<double> length;   // metres
    std::optional<double> width;    // metres
    std::optional<std::string> ship_type;

    bool complete() const noexcept;
    bool has_position() const noexcept { return lat.has_value() && lon.has_value(); }
    LatLon position() const;  // throws if !has_position()

    /// Range checks for present fields (lat/lon bounds, non-negative speed...).
    void validate() const;

    bool operator==(const AisRecord&) const = default;
};

struct VesselSequence {
    std::string vessel_id;
    std::vector<AisRecord> records;

    /// Shared vessel id and strictly increasing timestamps.
    void validate() const;
};

struct MinimalSegment {
    std::string vessel_id;
    std::size_t index = 0;
    std::vector<AisRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    bool complete() const noexcept;
    /// True when no record carries a position: the whole block was removed.
    bool removed() const noexcept;
    Timestamp first_timestamp() const { return records.front().timestamp; }
    Timestamp last_timestamp() const { return records.back().timestamp; }
};

struct Partition {
    std::vector<MinimalSegment> segments;
    std::size_t remainder = 0;  // trailing records excluded (T mod m)
};

/// Splits a sequence into floor(T/m) consecutive segments of m records.
Partition partition(const VesselSequence& sequence, std::size_t m);

struct ObservationMask {
    std::string vessel_id;
    std::size_t m = 0;
    std::vector<std::uint8_t> bits;  // 1 = every record of the segment complete
    /// Per-segment per-record evaluation flags: 1 where the position is to be
    /// imputed and scored.
    std::vector<std::vector<std::uint8_t>> internal;
    std::optional<std::uint64_t> seed;
    std::optional<double> removal_prob;

    /// Segments that are both incomplete and fully removed; these are the
    /// imputation targets.
    std::vector<std::size_t> gap_indices() const;

    bool operator==(const ObservationMask&) const = default;
};

ObservationMask compute_mask(const std::vector<MinimalSegment>& segments);

struct MaskedSegments {
    std::vector<MinimalSegment> segments;
    ObservationMask mask;
};

/// Removes each segment independently with probability `removal_prob`.
/// Removed records keep vessel id and timestamp; everything else is cleared.
MaskedSegments apply_block_missingness(const std::vector<MinimalSegment>& segments,
                                       double removal_prob, std::uint64_t seed);

/// Uniform double in [0,1) from a 64-bit draw (53 high bits), identical on
/// every platform.
double unit_uniform(std::uint64_t draw) noexcept;

/// Mask file: JSON array of {vessel_id, m, bits, seed, removal_prob,
/// removed}. `removed` lists the gap segments; their records are flagged for
/// evaluation when the file is read back. Malformed input -> ConfigError.
std::string masks_to_json(const std::vector<ObservationMask>& masks);
std::vector<ObservationMask> masks_from_json(const std::string& text);
void write_masks_file(const std::string& path, const std::vector<ObservationMask>& masks);
std::vector<ObservationMask> read_masks_file(const std::string& path);

// --- synthetic tracks -------------------------------------------------------

enum class TrackKind { ConstantVelocity, ConstantTurn, NoisyLinear };

struct SyntheticTrackParams {
    std::string vessel_id = "219000001";
    Timestamp start_time = 1'700'000'000;
    Timestamp step_seconds = 10;
    LatLon start{55.0, 10.0};
    LatLon velocity{0.001, 0.002};  // degrees per step
    double turn_rate = 0.0;         // radians per step, positive turns toward east
    double noise_sigma = 0.0;       // degrees, NoisyLinear only
    std::uint64_t seed = 1;
    std::string nav_status = "under way using engine";
    std::string cargo_type = "no additional information";
    std::string ship_type = "cargo";
    double draught = 5.3;
    double length = 120.0;
    double width = 20.0;
};

/// Fully complete sequence with analytically known positions.
VesselSequence generate_synthetic_track(TrackKind kind, std::size_t n,
                                        const SyntheticTrackParams& params = {});

// --- CSV --------------------------------------------------------------------

/// Header: mmsi,timestamp,lat,lon,sog,cog,heading,nav_status,cargo_type,
/// draught,length,width,ship_type. Empty cell = absent field. Timestamps are
/// epoch seconds or ISO-8601, detected once per file.
std::vector<VesselSequence> read_ais_csv(std::istream& in);
std::vector<VesselSequence> read_ais_csv_file(const std::string& path);

/// Writes epoch-second timestamps.
void write_ais_csv(std::ostream& out, const std::vector<VesselSequence>& sequences);
void write_ais_csv_file(const std::string& path, const std::vector<VesselSequence>& sequences);

Timestamp parse_timestamp(const std::string& text);

}  // namespace vista
