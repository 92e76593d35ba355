#include "vista/knowledge.hpp"

#include <cctype>
#include <regex>

#include <fmt/format.h>

#include "vista/error.hpp"

namespace vista {

std::string_view to_string(StaticKind kind) noexcept {
    switch (kind) {
        case StaticKind::VesselId: return "vessel_id";
        case StaticKind::NavStatus: return "nav_status";
        case StaticKind::CargoType: return "cargo_type";
        case StaticKind::DraughtBin: return "draught_bin";
        case StaticKind::LengthBin: return "length_bin";
        case StaticKind::WidthBin: return "width_bin";
        case StaticKind::ShipType: return "ship_type";
        case StaticKind::SpatialContext: return "spatial_context";
    }
    return "unknown";
}

StaticKind static_kind_from_string(std::string_view text) {
    for (StaticKind k : kStaticKinds)
        if (to_string(k) == text) return k;
    fail(ErrorCode::InvalidParameter, "unknown static attribute kind '" + std::string(text) + "'");
}

namespace {

std::string normalise(std::string_view text, std::string_view extra) {
    std::string out;
    bool pending_space = false;
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        const char lc = static_cast<char>(std::tolower(c));
        const bool keep = std::isalnum(c) || extra.find(raw) != std::string_view::npos;
        if (!keep || c >= 0x80) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out += ' ';
        pending_space = false;
        out += lc;
    }
    return out;
}

bool is_bin_kind(StaticKind kind) {
    return kind == StaticKind::DraughtBin || kind == StaticKind::LengthBin || kind == StaticKind::WidthBin;
}

}  // namespace

std::string canonical_token(std::string_view text) { return normalise(text, ""); }

bool is_canonical_token(std::string_view text) { return !text.empty() && canonical_token(text) == text; }

std::string canonical_static_value(StaticKind kind, std::string_view text) {
    if (is_bin_kind(kind)) {
        std::string s;
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) s += c;
        return s;
    }
    return normalise(text, "-._");
}

bool is_canonical_static_value(StaticKind kind, std::string_view text) {
    if (text.empty()) return false;
    if (is_bin_kind(kind)) {
        static const std::regex bin(R"(\[(0|[1-9][0-9]*),([1-9][0-9]*|inf)\))");
        return std::regex_match(text.begin(), text.end(), bin);
    }
    return canonical_static_value(kind, text) == text;
}

std::vector<StaticMember> StaticTuple::members() const {
    std::vector<StaticMember> out;
    out.reserve(kStaticKinds.size());
    for (StaticKind k : kStaticKinds) out.push_back({k, value(k)});
    return out;
}

const std::string& StaticTuple::value(StaticKind kind) const {
    switch (kind) {
        case StaticKind::VesselId: return vessel_id;
        case StaticKind::NavStatus: return nav_status;
        case StaticKind::CargoType: return cargo_type;
        case StaticKind::DraughtBin: return draught_bin;
        case StaticKind::LengthBin: return length_bin;
        case StaticKind::WidthBin: return width_bin;
        case StaticKind::ShipType: return ship_type;
        case StaticKind::SpatialContext: return spatial_context;
    }
    return vessel_id;
}

std::string duration_label(std::int64_t lower) {
    if (lower >= kDurationOpenBin) return fmt::format("[{},inf)", kDurationOpenBin);
    return fmt::format("[{},{})", lower, lower + kDurationBinWidth);
}

std::string behavior_label(const BehaviorTuple& b) {
    return fmt::format("speed: {}; course: {}; heading: {}; intent: {}; duration: {}", b.speed, b.course, b.heading,
                       b.intent, duration_label(b.duration_bin));
}

void require_canonical(const StaticTuple& s) {
    for (const auto& m : s.members())
        if (!is_canonical_static_value(m.kind, m.value))
            fail(ErrorCode::NotCanonical, fmt::format("{} value '{}' is not canonical", to_string(m.kind), m.value));
}

void require_canonical(const BehaviorTuple& b) {
    for (const std::string* t : {&b.speed, &b.course, &b.heading, &b.intent})
        if (!is_canonical_token(*t)) fail(ErrorCode::NotCanonical, "behavior token '" + *t + "' is not canonical");
    const bool on_grid = b.duration_bin >= 0 && b.duration_bin % kDurationBinWidth == 0;
    if (!on_grid || b.duration_bin > kDurationOpenBin)
        fail(ErrorCode::NotCanonical, fmt::format("duration bin {} is not on the 50 s grid", b.duration_bin));
}

}  // namespace vista
