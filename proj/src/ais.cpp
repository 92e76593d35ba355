#include "vista/ais.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "vista/error.hpp"

namespace vista {

bool AisRecord::complete() const noexcept {
    return lat && lon && heading && course && speed && nav_status && cargo_type && draught && length &&
           width && ship_type;
}

LatLon AisRecord::position() const {
    if (!has_position()) fail(ErrorCode::InvalidParameter, "record at " + std::to_string(timestamp) + " has no position");
    return {*lat, *lon};
}

void AisRecord::validate() const {
    auto reject = [&](const std::string& what) {
        fail(ErrorCode::InvalidParameter,
             fmt::format("vessel {} at {}: {}", vessel_id, timestamp, what));
    };
    if (vessel_id.empty()) reject("empty vessel id");
    if (lat && (!std::isfinite(*lat) || *lat < -90.0 || *lat > 90.0)) reject("latitude out of range");
    if (lon && (!std::isfinite(*lon) || *lon < -180.0 || *lon > 180.0)) reject("longitude out of range");
    if (speed && *speed < 0.0) reject("negative speed");
    if (draught && *draught < 0.0) reject("negative draught");
    if (length && *length <= 0.0) reject("non-positive length");
    if (width && *width <= 0.0) reject("non-positive width");
}

void VesselSequence::validate() const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.vessel_id != vessel_id)
            fail(ErrorCode::InvalidParameter, "record vessel id " + r.vessel_id + " != " + vessel_id);
        r.validate();
        if (i > 0 && records[i - 1].timestamp >= r.timestamp)
            fail(ErrorCode::InvalidParameter,
                 fmt::format("vessel {}: timestamps not strictly increasing at record {}", vessel_id, i));
    }
}

bool MinimalSegment::complete() const noexcept {
    return std::all_of(records.begin(), records.end(), [](const AisRecord& r) { return r.complete(); });
}

bool MinimalSegment::removed() const noexcept {
    return std::none_of(records.begin(), records.end(), [](const AisRecord& r) { return r.lat || r.lon; });
}

Partition partition(const VesselSequence& sequence, std::size_t m) {
    if (sequence.records.empty()) fail(ErrorCode::EmptyInput, "vessel " + sequence.vessel_id + " has no records");
    if (m < 2) fail(ErrorCode::InvalidParameter, "segment length must be >= 2");

    Partition out;
    const std::size_t count = sequence.records.size() / m;
    out.remainder = sequence.records.size() % m;
    out.segments.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        MinimalSegment seg;
        seg.vessel_id = sequence.vessel_id;
        seg.index = k;
        auto first = sequence.records.begin() + static_cast<std::ptrdiff_t>(k * m);
        seg.records.assign(first, first + static_cast<std::ptrdiff_t>(m));
        out.segments.push_back(std::move(seg));
    }
    return out;
}

std::vector<std::size_t> ObservationMask::gap_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        if (bits[k] != 0) continue;
        const auto& flags = internal.at(k);
        if (!flags.empty() && std::all_of(flags.begin(), flags.end(), [](std::uint8_t f) { return f == 1; }))
            out.push_back(k);
    }
    return out;
}

ObservationMask compute_mask(const std::vector<MinimalSegment>& segments) {
    ObservationMask mask;
    if (!segments.empty()) {
        mask.vessel_id = segments.front().vessel_id;
        mask.m = segments.front().size();
    }
    mask.bits.reserve(segments.size());
    mask.internal.reserve(segments.size());
    for (const auto& seg : segments) {
        mask.bits.push_back(seg.complete() ? 1 : 0);
        std::vector<std::uint8_t> flags(seg.size(), 0);
        for (std::size_t j = 0; j < seg.size(); ++j) flags[j] = seg.records[j].has_position() ? 0 : 1;
        mask.internal.push_back(std::move(flags));
    }
    return mask;
}

double unit_uniform(std::uint64_t draw) noexcept {
    return static_cast<double>(draw >> 11) * 0x1.0p-53;
}

MaskedSegments apply_block_missingness(const std::vector<MinimalSegment>& segments, double removal_prob,
                                       std::uint64_t seed) {
    if (!(removal_prob >= 0.0 && removal_prob <= 1.0))
        fail(ErrorCode::InvalidParameter, fmt::format("removal probability {} not in [0,1]", removal_prob));

    std::mt19937_64 rng(seed);
    MaskedSegments out;
    out.segments = segments;
    for (auto& seg : out.segments) {
        if (!(unit_uniform(rng()) < removal_prob)) continue;
        for (auto& r : seg.records) {
            AisRecord cleared;
            cleared.vessel_id = r.vessel_id;
            cleared.timestamp = r.timestamp;
            r = std::move(cleared);
        }
    }
    out.mask = compute_mask(out.segments);
    out.mask.seed = seed;
    out.mask.removal_prob = removal_prob;
    return out;
}

// --- synthetic tracks -------------------------------------------------------

VesselSequence generate_synthetic_track(TrackKind kind, std::size_t n, const SyntheticTrackParams& p) {
    if (n < 2) fail(ErrorCode::InvalidParameter, "synthetic track needs at least 2 records");

    std::mt19937_64 rng(p.seed);
    auto gaussian = [&]() {
        // Box-Muller on platform-independent uniforms.
        double u1 = unit_uniform(rng());
        double u2 = unit_uniform(rng());
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    };

    const double w = kind == TrackKind::ConstantTurn ? p.turn_rate : 0.0;
    VesselSequence seq;
    seq.vessel_id = p.vessel_id;
    seq.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        double dlat = 0.0, dlon = 0.0;  // displacement from start
        double vlat = p.velocity.lat, vlon = p.velocity.lon;
        if (w == 0.0) {
            dlat = t * p.velocity.lat;
            dlon = t * p.velocity.lon;
        } else {
            // Integral of the velocity rotated at constant rate w.
            const double a = std::sin(w * t) / w;
            const double b = (1.0 - std::cos(w * t)) / w;
            dlat = a * p.velocity.lat - b * p.velocity.lon;
            dlon = a * p.velocity.lon + b * p.velocity.lat;
            vlat = std::cos(w * t) * p.velocity.lat - std::sin(w * t) * p.velocity.lon;
            vlon = std::sin(w * t) * p.velocity.lat + std::cos(w * t) * p.velocity.lon;
        }
        double lat = p.start.lat + dlat;
        double lon = p.start.lon + dlon;
        if (kind == TrackKind::NoisyLinear && p.noise_sigma > 0.0) {
            lat += p.noise_sigma * gaussian();
            lon += p.noise_sigma * gaussian();
        }

        double course = std::atan2(vlon, vlat) * 180.0 / std::numbers::pi;
        if (course < 0.0) course += 360.0;
        if (course >= 360.0) course -= 360.0;
        const double knots = std::hypot(vlat, vlon) * 60.0 * 3600.0 / static_cast<double>(p.step_seconds);

        AisRecord r;
        r.vessel_id = p.vessel_id;
        r.timestamp = p.start_time + static_cast<Timestamp>(i) * p.step_seconds;
        r.lat = lat;
        r.lon = lon;
        r.heading = course;
        r.course = course;
        r.speed = knots;
        r.nav_status = p.nav_status;
        r.cargo_type = p.cargo_type;
        r.draught = p.draught;
        r.length = p.length;
        r.width = p.width;
        r.ship_type = p.ship_type;
        seq.records.push_back(std::move(r));
    }
    return seq;
}

// --- CSV --------------------------------------------------------------------

namespace {

const std::vector<std::string> kHeader = {"mmsi",      "timestamp", "lat",     "lon",    "sog",
                                          "cog",       "heading",   "nav_status", "cargo_type",
                                          "draught",   "length",    "width",   "ship_type"};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool is_epoch(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

Timestamp parse_iso8601(const std::string& s) {
    std::tm tm{};
    std::istringstream in(s);
    in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (in.fail()) {
        in.clear();
        in.str(s);
        in >> std::get_time(&tm, "%Y-%m-%d %H:%M:%S");
    }
    if (in.fail()) fail(ErrorCode::InvalidParameter, "unparseable timestamp '" + s + "'");
    std::string rest;
    std::getline(in, rest);
    // Fractional seconds are truncated; only a UTC suffix is accepted.
    auto pos = rest.find_first_not_of("0123456789.");
    if (!rest.empty() && rest[0] == '.') rest = pos == std::string::npos ? "" : rest.substr(pos);
    if (!(rest.empty() || rest == "Z" || rest == "+00:00"))
        fail(ErrorCode::InvalidParameter, "unsupported timezone suffix in '" + s + "'");
    return static_cast<Timestamp>(timegm(&tm));
}

std::optional<double> parse_number(const std::string& cell, const char* field) {
    if (cell.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidParameter, std::string("bad numeric value for ") + field + ": '" + cell + "'");
    }
}

std::optional<std::string> parse_text(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    return cell;
}

std::string format_number(const std::optional<double>& v) {
    if (!v) return {};
    return fmt::format("{}", *v);
}

std::string quote_text(const std::optional<std::string>& v) {
    if (!v) return {};
    if (v->find_first_of(",\"\n") == std::string::npos) return *v;
    std::string out = "\"";
    for (char c : *v) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
    const std::string s = trim(text);
    if (is_epoch(s)) return std::stoll(s);
    return parse_iso8601(s);
}

std::vector<VesselSequence> read_ais_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::IoError, "missing CSV header");
    auto header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
    for (const auto& required : kHeader)
        if (!column.count(required)) fail(ErrorCode::InvalidParameter, "CSV header lacks column '" + required + "'");

    std::vector<std::string> order;
    std::map<std::string, VesselSequence> by_vessel;
    std::optional<bool> epoch_format;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() < header.size())
            fail(ErrorCode::InvalidParameter, fmt::format("line {}: expected {} cells", line_no, header.size()));
        auto cell = [&](const char* name) { return trim(cells[column.at(name)]); };

        AisRecord r;
        r.vessel_id = cell("mmsi");
        const std::string ts = cell("timestamp");
        if (ts.empty()) fail(ErrorCode::InvalidParameter, fmt::format("line {}: empty timestamp", line_no));
        if (!epoch_format) epoch_format = is_epoch(ts);
        r.timestamp = *epoch_format ? std::stoll(ts) : parse_iso8601(ts);
        r.lat = parse_number(cell("lat"), "lat");
        r.lon = parse_number(cell("lon"), "lon");
        r.speed = parse_number(cell("sog"), "sog");
        r.course = parse_number(cell("cog"), "cog");
        r.heading = parse_number(cell("heading"), "heading");
        r.nav_status = parse_text(cell("nav_status"));
        r.cargo_type = parse_text(cell("cargo_type"));
        r.draught = parse_number(cell("draught"), "draught");
        r.length = parse_number(cell("length"), "length");
        r.width = parse_number(cell("width"), "width");
        r.ship_type = parse_text(cell("ship_type"));
        r.validate();

        auto [it, inserted] = by_vessel.try_emplace(r.vessel_id);
        if (inserted) {
            order.push_back(r.vessel_id);
            it->second.vessel_id = r.vessel_id;
        }
        it->second.records.push_back(std::move(r));
    }

    std::vector<VesselSequence> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        auto& seq = by_vessel[id];
        std::stable_sort(seq.records.begin(), seq.records.end(),
                         [](const AisRecord& a, const AisRecord& b) { return a.timestamp < b.timestamp; });
        // Duplicate timestamps: the first message wins.
        auto last = std::unique(seq.records.begin(), seq.records.end(),
                                [](const AisRecord& a, const AisRecord& b) { return a.timestamp == b.timestamp; });
        seq.records.erase(last, seq.records.end());
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<VesselSequence> read_ais_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    return read_ais_csv(in);
}

void write_ais_csv(std::ostream& out, const std::vector<VesselSequence>& sequences) {
    for (std::size_t i = 0; i < kHeader.size(); ++i) out << (i ? "," : "") << kHeader[i];
    out << '\n';
    for (const auto& seq : sequences) {
        for (const auto& r : seq.records) {
            out << quote_text(r.vessel_id) << ',' << r.timestamp << ',' << format_number(r.lat) << ','
                << format_number(r.lon) << ',' << format_number(r.speed) << ',' << format_number(r.course) << ','
                << format_number(r.heading) << ',' << quote_text(r.nav_status) << ',' << quote_text(r.cargo_type)
                << ',' << format_number(r.draught) << ',' << format_number(r.length) << ','
                << format_number(r.width) << ',' << quote_text(r.ship_type) << '\n';
        }
    }
}

void write_ais_csv_file(const std::string& path, const std::vector<VesselSequence>& sequences) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    write_ais_csv(out, sequences);
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace vista
