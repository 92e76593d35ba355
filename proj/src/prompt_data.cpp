#include "vista/prompt_data.hpp"

#include <cstdlib>
#include <sstream>

#include <fmt/format.h>

namespace vista {

namespace {

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

std::optional<double> parse_cell(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

constexpr const char* kTableHeader = "timestamp,lat,lon,speed,course,heading";

}  // namespace

std::string format_trajectory_data(const std::vector<AisRecord>& records, const StaticTuple* statics) {
    std::string out;
    if (statics) {
        for (const auto& m : statics->members()) out += fmt::format("{}: {}\n", to_string(m.kind), m.value);
    } else if (!records.empty()) {
        const auto& r = records.front();
        out += fmt::format("vessel_id: {}\n", r.vessel_id);
        if (r.nav_status) out += fmt::format("nav_status: {}\n", *r.nav_status);
        if (r.ship_type) out += fmt::format("ship_type: {}\n", *r.ship_type);
    }
    out += kTableHeader;
    out += '\n';
    for (const auto& r : records)
        out += fmt::format("{},{},{},{},{},{}\n", r.timestamp, cell(r.lat), cell(r.lon), cell(r.speed), cell(r.course),
                           cell(r.heading));
    return out;
}

TrajectoryData parse_trajectory_data(const std::string& text) {
    TrajectoryData data;
    std::istringstream in(text);
    std::string line;
    bool table = false;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (!table) {
            if (line == kTableHeader) {
                table = true;
                continue;
            }
            const auto colon = line.find(':');
            if (colon != std::string::npos) data.attributes[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(trim(c));
        while (cells.size() < 6) cells.emplace_back();
        TrajectoryRow row;
        row.timestamp = std::strtoll(cells[0].c_str(), nullptr, 10);
        row.lat = parse_cell(cells[1]);
        row.lon = parse_cell(cells[2]);
        row.speed = parse_cell(cells[3]);
        row.course = parse_cell(cells[4]);
        row.heading = parse_cell(cells[5]);
        data.rows.push_back(row);
    }
    return data;
}

std::string format_pattern(const BehaviorTuple& b) {
    return fmt::format("speed_pattern: {}; course_pattern: {}; heading_pattern: {}; intent: {}; duration: {}", b.speed,
                       b.course, b.heading, b.intent, duration_label(b.duration_bin));
}

BehaviorTuple parse_pattern(const std::string& text) {
    BehaviorTuple b;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) continue;
        const std::string key = trim(part.substr(0, colon));
        const std::string value = trim(part.substr(colon + 1));
        if (key == "speed_pattern") b.speed = value;
        else if (key == "course_pattern") b.course = value;
        else if (key == "heading_pattern") b.heading = value;
        else if (key == "intent") b.intent = value;
        else if (key == "duration" && value.size() > 1) b.duration_bin = std::strtoll(value.c_str() + 1, nullptr, 10);
    }
    return b;
}

std::string format_token_list(const std::vector<std::string>& tokens) {
    std::string out = "[";
    for (std::size_t i = 0; i < tokens.size(); ++i) out += (i ? ", " : "") + tokens[i];
    return out + "]";
}

}  // namespace vista
