#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include "vista/error.hpp"
#include "vista/oracle.hpp"
#include "vista/prompt_data.hpp"

namespace vista {

namespace {

const std::string& var(const Variables& vars, const std::string& name) {
    static const std::string empty;
    auto it = vars.find(name);
    return it == vars.end() ? empty : it->second;
}

double round9(double v) { return std::stod(fmt::format("{:.9g}", v)); }

// --- behavior abstraction ----------------------------------------------------

std::string speed_token(const std::vector<double>& s) {
    if (s.size() < 2) return "stable";
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(s.size()));
    if (mean <= 0.0) return sd == 0.0 ? "stable" : "fluctuating";
    if (sd / mean < 0.05) return "stable";
    const double trend = (s.back() - s.front()) / mean;
    if (trend > 0.1) return "increasing";
    if (trend < -0.1) return "decreasing";
    return "fluctuating";
}

std::string angle_token(const std::vector<double>& deg) {
    if (deg.size() < 2) return "stable";
    double cur = deg.front(), lo = cur, hi = cur;
    for (std::size_t i = 1; i < deg.size(); ++i) {
        double d = std::fmod(deg[i] - deg[i - 1], 360.0);
        if (d > 180.0) d -= 360.0;
        if (d <= -180.0) d += 360.0;
        cur += d;
        lo = std::min(lo, cur);
        hi = std::max(hi, cur);
    }
    const double span = hi - lo;
    if (span < 10.0) return "stable";
    if (span < 45.0) return "gradual";
    return "sharp";
}

std::string intent_token(const TrajectoryData& data, const std::vector<double>& speeds) {
    auto attr = [&](const char* k) {
        auto it = data.attributes.find(k);
        return it == data.attributes.end() ? std::string() : it->second;
    };
    const std::string nav = attr("nav_status");
    const std::string ctx = attr("spatial_context");
    if (nav.find("anchor") != std::string::npos) return "anchoring";
    if (nav.find("moored") != std::string::npos) return "mooring";
    if (nav.find("fishing") != std::string::npos) return "fishing";
    if (nav.find("restricted") != std::string::npos) return "maneuvering";
    double mean = 0.0;
    for (double v : speeds) mean += v;
    if (!speeds.empty()) mean /= static_cast<double>(speeds.size());
    if (ctx == "anchorage" && !speeds.empty() && mean < 1.0) return "anchoring";
    if (ctx == "port") return "port approach";
    return "navigating";
}

std::string behavior_abstraction(const Variables& vars) {
    const TrajectoryData data = parse_trajectory_data(var(vars, "trajectory_data"));
    std::vector<double> speeds, courses, headings;
    for (const auto& r : data.rows) {
        if (r.speed) speeds.push_back(*r.speed);
        if (r.course) courses.push_back(*r.course);
        if (r.heading) headings.push_back(*r.heading);
    }
    ParsedPattern p;
    p.speed = speed_token(speeds);
    p.course = angle_token(courses);
    p.heading = angle_token(headings);
    p.intent = intent_token(data, speeds);
    static const std::map<std::string, std::string> notes = {
        {"stable", "no significant change over the segment"},
        {"increasing", "the value rises steadily over the segment"},
        {"decreasing", "the value falls steadily over the segment"},
        {"fluctuating", "the value varies without a clear trend"},
        {"gradual", "a smooth and moderate change over the segment"},
        {"sharp", "a large change indicating a turning maneuver"},
    };
    p.speed_note = notes.at(p.speed);
    p.course_note = notes.at(p.course);
    p.heading_note = notes.at(p.heading);
    p.intent_note = "inferred from navigation status and spatial context";
    return format_behavior_abstraction(p);
}

// --- method builder ----------------------------------------------------------

struct Pos {
    double t, lat, lon;
};

std::vector<Pos> positions(const TrajectoryData& data) {
    std::vector<Pos> out;
    for (const auto& r : data.rows)
        if (r.lat && r.lon) out.push_back({static_cast<double>(r.timestamp), *r.lat, *r.lon});
    return out;
}

// Chord directions over the two halves differ by omega * (total time) / 2.
double estimate_omega(const std::vector<Pos>& p) {
    if (p.size() < 3) return 0.0;
    const Pos& a = p.front();
    const Pos& m = p[p.size() / 2];
    const Pos& b = p.back();
    if (b.t <= a.t) return 0.0;
    const double a1 = std::atan2(m.lon - a.lon, m.lat - a.lat);
    const double a2 = std::atan2(b.lon - m.lon, b.lat - m.lat);
    double d = a2 - a1;
    while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
    while (d <= -std::numbers::pi) d += 2 * std::numbers::pi;
    return d / ((b.t - a.t) / 2.0);
}

ParamList estimate_params(const std::string& family, const TrajectoryData& data) {
    const auto p = positions(data);
    if (family == kConstantTurn) return {{"omega", round9(estimate_omega(p))}};
    if (family == kDecelerateThenAlign) {
        double decay = 0.0;
        std::vector<double> s;
        for (const auto& r : data.rows)
            if (r.speed) s.push_back(*r.speed);
        if (s.size() >= 2 && s.front() > 0.0) decay = std::clamp(1.0 - s.back() / s.front(), 0.0, 0.95);
        return {{"omega", round9(estimate_omega(p))}, {"decay", round9(decay)}};
    }
    if (family == kCubicHermite) {
        double v[4] = {0, 0, 0, 0};
        if (p.size() >= 2) {
            const Pos &a = p[0], &b = p[1], &c = p[p.size() - 2], &d = p.back();
            if (b.t > a.t) {
                v[0] = (b.lat - a.lat) / (b.t - a.t);
                v[1] = (b.lon - a.lon) / (b.t - a.t);
            }
            if (d.t > c.t) {
                v[2] = (d.lat - c.lat) / (d.t - c.t);
                v[3] = (d.lon - c.lon) / (d.t - c.t);
            }
        }
        return {{"vlat0", round9(v[0])}, {"vlon0", round9(v[1])}, {"vlat1", round9(v[2])}, {"vlon1", round9(v[3])}};
    }
    return {};
}

std::string preferred_family(const BehaviorTuple& b) {
    const bool straight = b.course == "stable" && (b.heading == "stable" || b.heading.empty());
    if (straight) return std::string(b.speed == "stable" || b.speed.empty() ? kLinear : kCubicHermite);
    return std::string(b.speed == "decreasing" ? kDecelerateThenAlign : kConstantTurn);
}

std::string family_description(const std::string& family) {
    if (family == kLinear) return "Straight-line interpolation between the boundary positions at constant speed.";
    if (family == kCubicEase) return "Straight path with smooth acceleration out of the start and deceleration into the end.";
    if (family == kCubicHermite)
        return "Cubic Hermite curve matching the boundary positions and the boundary velocities vlat0, vlon0, vlat1, "
               "vlon1 in degrees per second.";
    if (family == kConstantTurn)
        return "Circular arc through both boundary positions with constant speed and constant turn rate omega in "
               "radians per second.";
    if (family == kDecelerateThenAlign)
        return "Circular arc with turn rate omega along which speed falls linearly by the fraction decay.";
    return "Path model given by the expressions.";
}

std::string method_builder(const Variables& vars) {
    const TrajectoryData data = parse_trajectory_data(var(vars, "trajectory_data"));
    const BehaviorTuple pattern = parse_pattern(var(vars, "pattern"));
    std::set<std::string> tried;
    static const std::regex fam(R"(family: ([a-z-]+))");
    const std::string& feedback = var(vars, "feedback_text_description");
    for (std::sregex_iterator it(feedback.begin(), feedback.end(), fam), end; it != end; ++it) tried.insert((*it)[1]);

    std::vector<std::string> order = {preferred_family(pattern)};
    for (const auto& f : {kLinear, kConstantTurn, kCubicHermite, kDecelerateThenAlign, kCubicEase})
        if (std::find(order.begin(), order.end(), f) == order.end()) order.emplace_back(f);
    std::string family = order.front();
    for (const auto& f : order)
        if (!tried.count(f)) {
            family = f;
            break;
        }
    ParsedFunction out;
    out.func = builtin_function(family, estimate_params(family, data));
    out.func.origin = FunctionOrigin::OracleGenerated;
    out.description = family_description(family);
    return format_method_builder(out);
}

std::string function_description(const Variables& vars) {
    const std::string& text = var(vars, "function_text");
    std::smatch m;
    std::string family = "custom";
    static const std::regex fam(R"(family: ([a-z0-9.-]+))");
    if (std::regex_search(text, m, fam)) family = m[1];
    const BehaviorTuple b = parse_pattern(var(vars, "pattern"));
    std::string params = "none";
    static const std::regex par(R"(params: ([^\n]*))");
    if (std::regex_search(text, m, par)) params = m[1];
    return fmt::format(
        "Description: {} path model for movements with {} speed, {} course and {} heading while {}. {} "
        "Parameters: {}.",
        family, b.speed, b.course, b.heading, b.intent, family_description(family), params);
}

// --- selection ---------------------------------------------------------------

// Decimal strings without leading zeros compare by length, then lexically.
bool bigger(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a > b;
}

std::string field(const std::string& line, const std::string& key) {
    const auto pos = line.find(key + "=");
    if (pos == std::string::npos) return {};
    const auto start = pos + key.size() + 1;
    const auto end = line.find(';', start);
    return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

struct Candidate {
    std::uint64_t id = 0;
    std::string support;
    std::string line;
};

std::vector<Candidate> candidates(const std::string& text, const std::regex& head) {
    std::vector<Candidate> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_search(line, m, head)) continue;
        out.push_back({std::stoull(m[1]), field(line, "support"), line});
    }
    return out;
}

const Candidate* argmax(const std::vector<Candidate>& c) {
    const Candidate* best = nullptr;
    for (const auto& x : c)
        if (!best || bigger(x.support, best->support) || (x.support == best->support && x.id < best->id)) best = &x;
    return best;
}

std::string behavior_select(const Variables& vars) {
    static const std::regex head(R"(^\s*Movement_Pattern_(\d+):)");
    const auto c = candidates(var(vars, "movement_text"), head);
    const Candidate* best = argmax(c);
    if (!best) return "'''\nSelected Movement ID: none\n'''\n";
    std::string edges = field(best->line, "edges");
    if (edges.empty()) edges = "no static attribute edges";
    ParsedBehaviorSelection p;
    p.selected = best->id;
    p.graph_support = fmt::format("{} (support {}, prior {})", edges, best->support, field(best->line, "prior"));
    std::string boundary = var(vars, "boundary_text");
    std::replace(boundary.begin(), boundary.end(), '\n', ' ');
    p.contextual_justification =
        fmt::format("The candidate with the largest statistical support ({}) agrees with the boundary context: {}",
                    fmt::format("{} speed, {} course, {} heading, {}", field(best->line, "speed"),
                                field(best->line, "course"), field(best->line, "heading"), field(best->line, "intent")),
                    boundary.empty() ? "none available" : boundary);
    return format_behavior_selection(p);
}

std::string method_select(const Variables& vars) {
    static const std::regex head(R"(^\s*Function_(\d+):)");
    const auto c = candidates(var(vars, "functions_text"), head);
    const Candidate* best = argmax(c);
    if (!best) return "'''\nSelected Function ID: none\n'''\n";
    std::string terms;
    boost::multiprecision::cpp_int sum = 0;
    for (const auto& x : c) {
        terms += fmt::format("{}({}+1)", terms.empty() ? "" : "+", field(x.line, "weight"));
        sum += boost::multiprecision::cpp_int(x.support.empty() ? std::string("0") : x.support);
    }
    const std::string total = sum.str();
    const double prob = std::stod(field(best->line, "prior"));
    const std::string family = field(best->line, "family");
    ParsedMethodSelection p;
    p.selected = best->id;
    p.statistical_support = fmt::format(
        "1. Probability that this function resolves gaps of this movement: ({}+1)/({}) = {}/{} = {:.4f}. "
        "2. It is a {} model, which matches the kinematics of the selected movement.",
        field(best->line, "weight"), terms, best->support, total, prob, family.empty() ? "custom" : family);
    const BehaviorTuple b = parse_pattern(var(vars, "movement_text"));
    p.reasoning = fmt::format("A {} path suits {} speed with {} course and {} heading.",
                              family.empty() ? "custom" : family, b.speed, b.course, b.heading);
    return format_method_selection(p);
}

// --- explanation -------------------------------------------------------------

std::string explain(const Variables& vars) {
    const std::string& vessels = var(vars, "vessels_desc_block");
    std::string context = "open-water", ship = "vessel", nav = "under way";
    {
        std::istringstream in(vessels);
        std::string line;
        bool have_context = false;
        while (std::getline(in, line)) {
            auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = line.substr(0, colon);
            key.erase(0, key.find_first_not_of(" -"));
            std::string value = line.substr(colon + 1);
            value.erase(0, value.find_first_not_of(' '));
            if (key == "spatial_context" && (!have_context || context == "open-water")) {
                context = value;
                have_context = true;
            } else if (key == "ship_type") {
                ship = value;
            } else if (key == "nav_status") {
                nav = value;
            }
        }
    }
    ParsedExplanation e;
    if (context == "traffic-separation-scheme")
        e.regulatory_rule_cue =
            "Traffic separation scheme routing: a vessel using the scheme proceeds in the appropriate traffic lane "
            "in the general direction of traffic flow; applies within the traffic separation scheme around the gap.";
    else if (context == "shipping-lane")
        e.regulatory_rule_cue =
            "Shipping lane routing: vessels keep to the designated lane and hold a steady track; applies along the "
            "shipping lane containing the gap.";
    else if (context == "anchorage")
        e.regulatory_rule_cue =
            "Anchorage area rules: reduced speed and restricted maneuvering inside the designated anchorage; applies "
            "within the anchorage around the gap.";
    else if (context == "port")
        e.regulatory_rule_cue =
            "Port approach regulations: speed limits and controlled approach inside port limits; applies within the "
            "port area around the gap.";
    else
        e.regulatory_rule_cue = "Undetermined";

    const std::string& movement = var(vars, "movement_desc");
    auto token = [&](const std::string& key) {
        std::smatch m;
        const std::regex re(key + R"(: ([a-z0-9 ]+))");
        return std::regex_search(movement, m, re) ? m[1].str() : std::string("unknown");
    };
    std::smatch m;
    std::string family = "selected";
    static const std::regex fam(R"(family: ([a-z0-9.-]+))");
    const std::string& fdesc = var(vars, "function_desc");
    if (std::regex_search(fdesc, m, fam)) family = m[1];
    e.operational_protocol_rationale = fmt::format(
        "A {} speed with {} course and {} heading is typical for a {} that is {} in {} waters; the {} method "
        "reproduces this motion between the boundary positions. Abrupt turns or speed changes are not supported by "
        "the neighboring segments.",
        token("speed"), token("course"), token("heading"), ship, nav, context, family);
    return format_explanation(e);
}

// --- de-redundancy -----------------------------------------------------------

const std::vector<std::pair<std::string, std::vector<std::string>>>& synonym_classes() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> classes = {
        {"stable", {"steady", "constant", "consistent", "uniform", "unchanged", "straight", "constant speed",
                    "steady speed", "steady course"}},
        {"increasing", {"accelerating", "speeding up", "rising"}},
        {"decreasing", {"decelerating", "slowing", "slowing down", "falling"}},
        {"gradual", {"slight", "gentle", "gradual turn", "slowly turning", "slight turn"}},
        {"sharp", {"abrupt", "sharp turn", "rapid turn"}},
        {"fluctuating", {"variable", "irregular", "oscillating"}},
        {"navigating", {"transiting", "cruising", "underway", "en route", "in transit"}},
        {"anchoring", {"anchored", "at anchor"}},
    };
    return classes;
}

std::string dedup(const Variables& vars) {
    ParsedDedup out;
    std::istringstream in(var(vars, "vb_data_text"));
    std::string line;
    static const std::regex attr_line(R"(^\[([a-z_]+)\]:\s*(.*)$)");
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_match(line, m, attr_line)) continue;
        const std::string attribute = m[1];
        std::vector<std::string> tokens;
        std::stringstream ss(m[2].str());
        std::string t;
        while (std::getline(ss, t, ',')) {
            t = canonical_token(t);
            if (!t.empty() && std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
        }
        std::set<std::string> grouped;
        for (const auto& [head, members] : synonym_classes()) {
            std::vector<std::string> present;
            const bool head_present = std::find(tokens.begin(), tokens.end(), head) != tokens.end();
            for (const auto& tok : tokens)
                if (tok != head && std::find(members.begin(), members.end(), tok) != members.end())
                    present.push_back(tok);
            if (present.empty() || (!head_present && present.size() < 2)) continue;
            MergeGroup g;
            g.primary = head_present ? head : present.front();
            for (const auto& tok : present)
                if (tok != g.primary) g.redundant.push_back(tok);
            grouped.insert(g.primary);
            grouped.insert(g.redundant.begin(), g.redundant.end());
            out.behavior[attribute].push_back(std::move(g));
        }
        for (const auto& tok : tokens)
            if (!grouped.count(tok)) out.behavior_keep.push_back(tok);
    }
    std::istringstream fin(var(vars, "vf_data_text"));
    while (std::getline(fin, line)) {
        const auto bar = line.find(" | ");
        if (bar != std::string::npos) out.function_keep.push_back(line.substr(0, bar));
    }
    return format_dedup(out);
}

}  // namespace

OracleResponse StubOracle::call(const OracleRequest& request) {
    // Same validation as a real backend would apply to the rendered prompt.
    render(request.id, request.variables);
    OracleResponse resp;
    switch (request.id) {
        case TemplateId::BehaviorAbstraction: resp.raw = behavior_abstraction(request.variables); break;
        case TemplateId::MethodBuilder: resp.raw = method_builder(request.variables); break;
        case TemplateId::BehaviorSelect: resp.raw = behavior_select(request.variables); break;
        case TemplateId::MethodSelect: resp.raw = method_select(request.variables); break;
        case TemplateId::Explain: resp.raw = explain(request.variables); break;
        case TemplateId::Dedup: resp.raw = dedup(request.variables); break;
        case TemplateId::FunctionDescription: resp.raw = function_description(request.variables); break;
    }
    return resp;
}

OracleResponse RoutingOracle::call(const OracleRequest& request) {
    auto it = routes_.find(request.id);
    Oracle& backend = it == routes_.end() ? *default_ : *it->second;
    return backend.call(request);
}

}  // namespace vista
