#pragma once

// Canonical knowledge components distilled from one complete segment.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vista/function_spec.hpp"

namespace vista {

using NodeId = std::uint64_t;

enum class StaticKind {
    VesselId,
    NavStatus,
    CargoType,
    DraughtBin,
    LengthBin,
    WidthBin,
    ShipType,
    SpatialContext,
};

inline constexpr std::array<StaticKind, 8> kStaticKinds = {
    StaticKind::VesselId,  StaticKind::NavStatus, StaticKind::CargoType, StaticKind::DraughtBin,
    StaticKind::LengthBin, StaticKind::WidthBin,  StaticKind::ShipType,  StaticKind::SpatialContext,
};

std::string_view to_string(StaticKind kind) noexcept;
StaticKind static_kind_from_string(std::string_view text);

/// Lowercase, trimmed, single-spaced; anything other than [a-z0-9] becomes a
/// space. May return an empty string.
std::string canonical_token(std::string_view text);
bool is_canonical_token(std::string_view text);

/// Static values keep '-' and '.' (category names, vessel ids) but are
/// otherwise held to the token rules. Bin kinds must match "[a,b)" or "[a,inf)".
std::string canonical_static_value(StaticKind kind, std::string_view text);
bool is_canonical_static_value(StaticKind kind, std::string_view text);

struct StaticMember {
    StaticKind kind;
    std::string value;

    auto operator<=>(const StaticMember&) const = default;
};

struct StaticTuple {
    std::string vessel_id;
    std::string nav_status;
    std::string cargo_type;
    std::string draught_bin;
    std::string length_bin;
    std::string width_bin;
    std::string ship_type;
    std::string spatial_context;

    std::vector<StaticMember> members() const;
    const std::string& value(StaticKind kind) const;

    bool operator==(const StaticTuple&) const = default;
};

inline constexpr std::int64_t kDurationBinWidth = 50;
inline constexpr std::int64_t kDurationOpenBin = 3600;

struct BehaviorTuple {
    std::string speed;
    std::string course;
    std::string heading;
    std::string intent;
    std::int64_t duration_bin = 0;  // lower bound of the 50 s bin, 3600 = open bin

    auto operator<=>(const BehaviorTuple&) const = default;
};

/// "[1300,1350)" or "[3600,inf)".
std::string duration_label(std::int64_t lower);
std::string behavior_label(const BehaviorTuple& b);

struct KnowledgeUnit {
    std::string vessel_id;
    std::size_t segment_index = 0;
    StaticTuple statics;
    BehaviorTuple behavior;
    /// Function as proposed during extraction; never rewritten.
    FunctionSpec proposed_function;
    /// Function after de-redundancy (a representative of its class).
    FunctionSpec function;
    std::string function_description;
    FitReport fit;
    std::optional<NodeId> function_id;  // set once committed
};

/// Throws NotCanonical if any token or static value breaks the grammar.
void require_canonical(const StaticTuple& s);
void require_canonical(const BehaviorTuple& b);

}  // namespace vista
