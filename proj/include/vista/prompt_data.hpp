#pragma once

// Text formats of the variables bound into the prompt templates. The stub
// oracle parses these back, so producers and the stub share one definition.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vista/ais.hpp"
#include "vista/knowledge.hpp"

namespace vista {

/// Attribute lines ("key: value") followed by a CSV table with header
/// timestamp,lat,lon,speed,course,heading.
std::string format_trajectory_data(const std::vector<AisRecord>& records, const StaticTuple* statics);

struct TrajectoryRow {
    Timestamp timestamp = 0;
    std::optional<double> lat, lon, speed, course, heading;
};

struct TrajectoryData {
    std::map<std::string, std::string> attributes;
    std::vector<TrajectoryRow> rows;
};

TrajectoryData parse_trajectory_data(const std::string& text);

/// "speed_pattern: a; course_pattern: b; heading_pattern: c; intent: d; duration: [x,y)"
std::string format_pattern(const BehaviorTuple& b);
/// Inverse of format_pattern for the four tokens; missing keys stay empty.
BehaviorTuple parse_pattern(const std::string& text);

/// "[a, b, c]"
std::string format_token_list(const std::vector<std::string>& tokens);

}  // namespace vista
