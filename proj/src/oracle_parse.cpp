#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "vista/error.hpp"
#include "vista/oracle.hpp"

namespace vista {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void malformed(std::size_t offset, const std::string& what) {
    fail(ErrorCode::MalformedOracleOutput, fmt::format("at byte {}: {}", offset, what));
}

void require_nonblank(std::string_view raw) {
    if (trim(raw).empty()) fail(ErrorCode::EmptyOracleOutput, "oracle returned no text");
}

struct Line {
    std::string text;
    std::size_t offset;
};

std::vector<Line> split_lines(std::string_view s, std::size_t base) {
    std::vector<Line> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t nl = s.find('\n', start);
        if (nl == std::string_view::npos) nl = s.size();
        std::string_view line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back({std::string(line), base + start});
        if (nl == s.size()) break;
        start = nl + 1;
    }
    return out;
}

// Block between fences, with the byte offset of its first character.
std::pair<std::string, std::size_t> block_with_offset(std::string_view raw) {
    require_nonblank(raw);
    for (std::string_view fence : {std::string_view("'''"), std::string_view("```")}) {
        const std::size_t open = raw.find(fence);
        if (open == std::string_view::npos) continue;
        std::size_t body = open + fence.size();
        const std::size_t close = raw.find(fence, body);
        if (close == std::string_view::npos) malformed(open, "unterminated " + std::string(fence) + " block");
        // ```text fences may carry a language tag on the opening line.
        if (fence == "```") {
            std::size_t nl = raw.find('\n', body);
            if (nl != std::string_view::npos && nl < close &&
                trim(raw.substr(body, nl - body)).find(' ') == std::string::npos &&
                trim(raw.substr(body, nl - body)).find(':') == std::string::npos)
                body = nl + 1;
        }
        return {std::string(raw.substr(body, close - body)), body};
    }
    malformed(0, "no triple-quoted block");
}

// Labeled fields; a value runs until the next label line. Labels match at
// line start, case-sensitive, after optional "- " and whitespace.
std::map<std::string, std::pair<std::string, std::size_t>> labeled_fields(const std::string& block, std::size_t base,
                                                                          const std::vector<std::string>& labels) {
    std::map<std::string, std::pair<std::string, std::size_t>> out;
    std::string current;
    for (const auto& line : split_lines(block, base)) {
        std::string_view t = line.text;
        while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
        if (t.starts_with("- ")) t.remove_prefix(2);
        bool matched = false;
        for (const auto& label : labels) {
            if (t.starts_with(label) && t.size() > label.size() && t[label.size()] == ':') {
                if (out.count(label)) malformed(line.offset, "duplicate field '" + label + "'");
                out[label] = {std::string(t.substr(label.size() + 1)), line.offset};
                current = label;
                matched = true;
                break;
            }
        }
        if (!matched && !current.empty()) out[current].first += "\n" + line.text;
    }
    for (auto& [k, v] : out) v.first = trim(v.first);
    for (const auto& label : labels) {
        auto it = out.find(label);
        if (it == out.end()) malformed(base, "missing field '" + label + "'");
        if (it->second.first.empty()) malformed(it->second.second, "empty field '" + label + "'");
    }
    return out;
}

NodeId parse_node_ref(const std::string& text, std::string_view prefix, std::size_t offset) {
    std::string t = trim(text);
    if (t.size() >= 2 && t.front() == '<' && t.back() == '>') t = trim(t.substr(1, t.size() - 2));
    if (t.starts_with(prefix)) t = t.substr(prefix.size());
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
        malformed(offset, "'" + text + "' is not a node id");
    return std::strtoull(t.c_str(), nullptr, 10);
}

std::vector<std::string> parse_bracket_list(std::string_view text, std::size_t offset) {
    std::string t = trim(text);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') malformed(offset, "expected a [..] list");
    std::vector<std::string> out;
    std::stringstream ss(t.substr(1, t.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.size() >= 2 && item.front() == '<' && item.back() == '>') item = trim(item.substr(1, item.size() - 2));
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

}  // namespace

std::string extract_block(std::string_view raw) { return block_with_offset(raw).first; }

ParsedPattern parse_behavior_abstraction(std::string_view raw) {
    const auto [block, base] = block_with_offset(raw);
    const auto fields = labeled_fields(block, base, {"speed_pattern", "course_pattern", "heading_pattern", "intent"});
    ParsedPattern p;
    auto split = [&](const std::string& label, std::string& token, std::string& note) {
        const auto& [value, offset] = fields.at(label);
        const std::size_t paren = value.find('(');
        token = canonical_token(value.substr(0, paren));
        if (paren != std::string::npos) {
            std::size_t close = value.rfind(')');
            note = trim(value.substr(paren + 1, close == std::string::npos || close < paren ? std::string::npos
                                                                                               : close - paren - 1));
        }
        if (token.empty()) malformed(offset, "field '" + label + "' has no token");
    };
    split("speed_pattern", p.speed, p.speed_note);
    split("course_pattern", p.course, p.course_note);
    split("heading_pattern", p.heading, p.heading_note);
    split("intent", p.intent, p.intent_note);
    return p;
}

ParsedFunction parse_method_builder(std::string_view raw) {
    const auto [block, base] = block_with_offset(raw);
    ParsedFunction out;
    out.func.origin = FunctionOrigin::OracleGenerated;
    std::optional<std::string> lat, lon;
    for (const auto& line : split_lines(block, base)) {
        const std::string t = trim(line.text);
        if (t.empty()) continue;
        const std::size_t colon = t.find(':');
        if (colon == std::string::npos) malformed(line.offset, "expected 'key: value', got '" + t + "'");
        const std::string key = trim(t.substr(0, colon));
        const std::string value = trim(t.substr(colon + 1));
        if (key == "family") {
            out.func.family = canonical_static_value(StaticKind::SpatialContext, value);
        } else if (key == "params") {
            if (value == "none" || value.empty()) continue;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const std::size_t eq = item.find('=');
                if (eq == std::string::npos) malformed(line.offset, "parameter '" + trim(item) + "' has no value");
                const std::string name = trim(item.substr(0, eq));
                const std::string num = trim(item.substr(eq + 1));
                char* end = nullptr;
                const double v = std::strtod(num.c_str(), &end);
                if (num.empty() || end != num.c_str() + num.size() || !std::isfinite(v))
                    malformed(line.offset, "parameter '" + name + "' value '" + num + "' is not a number");
                if (!iel::is_valid_param_name(name))
                    fail(ErrorCode::UnsupportedConstruct, "invalid parameter name '" + name + "'");
                out.func.params.emplace_back(name, v);
            }
        } else if (key == "lat") {
            lat = value;
        } else if (key == "lon") {
            lon = value;
        } else {
            malformed(line.offset, "unexpected key '" + key + "' in function block");
        }
    }
    if (!lat || lat->empty()) malformed(base, "function block has no lat expression");
    if (!lon || lon->empty()) malformed(base, "function block has no lon expression");
    out.func.lat_expr = *lat;
    out.func.lon_expr = *lon;
    CompiledFunction check(out.func);  // UnsupportedConstruct on bad IEL

    const std::string_view rest = raw.substr(std::min(raw.size(), base + block.size() + 3));
    const std::size_t d = rest.find("Description:");
    if (d != std::string_view::npos) out.description = trim(rest.substr(d + 12));
    return out;
}

ParsedBehaviorSelection parse_behavior_selection(std::string_view raw) {
    const auto [block, base] = block_with_offset(raw);
    const auto f = labeled_fields(block, base, {"Selected Movement ID", "Graph Support", "Contextual Justification"});
    ParsedBehaviorSelection p;
    const auto& [id, off] = f.at("Selected Movement ID");
    p.selected = parse_node_ref(id, "Movement_Pattern_", off);
    p.graph_support = f.at("Graph Support").first;
    p.contextual_justification = f.at("Contextual Justification").first;
    return p;
}

ParsedMethodSelection parse_method_selection(std::string_view raw) {
    const auto [block, base] = block_with_offset(raw);
    const auto f = labeled_fields(block, base, {"Selected Function ID", "Statistical Support", "Reasoning"});
    ParsedMethodSelection p;
    const auto& [id, off] = f.at("Selected Function ID");
    p.selected = parse_node_ref(id, "Function_", off);
    p.statistical_support = f.at("Statistical Support").first;
    p.reasoning = f.at("Reasoning").first;
    return p;
}

ParsedExplanation parse_explanation(std::string_view raw) {
    const auto [block, base] = block_with_offset(raw);
    const auto f = labeled_fields(block, base, {"Regulatory Rule Cue", "Operational Protocol Rationale"});
    return {f.at("Regulatory Rule Cue").first, f.at("Operational Protocol Rationale").first};
}

ParsedDedup parse_dedup(std::string_view raw) {
    require_nonblank(raw);
    std::string_view body = raw;
    std::size_t base = 0;
    std::string fenced;
    if (raw.find("'''") != std::string_view::npos || raw.find("```") != std::string_view::npos) {
        auto [b, off] = block_with_offset(raw);
        fenced = std::move(b);
        body = fenced;
        base = off;
    }
    enum class Section { None, Behavior, Function } section = Section::None;
    bool saw_behavior = false, saw_function = false;
    std::string attribute = "behavior";
    static const std::regex group_re(R"(^-\s*(.+?)\s*\|\s*(\[.*\])\s*$)");
    static const std::regex attr_re(R"(^\[?([A-Za-z_ ]+)\]?:$)");

    ParsedDedup out;
    for (const auto& line : split_lines(body, base)) {
        const std::string t = trim(line.text);
        if (t.empty()) continue;
        if (t == "BEHAVIOR_REDUNDANCY:") {
            section = Section::Behavior;
            saw_behavior = true;
            continue;
        }
        if (t == "FUNCTION_REDUNDANCY:") {
            section = Section::Function;
            saw_function = true;
            continue;
        }
        if (section == Section::None) continue;  // preamble prose
        std::smatch m;
        if (t.starts_with("KEEP_UNIQUE:")) {
            auto items = parse_bracket_list(std::string_view(t).substr(12), line.offset);
            auto& keep = section == Section::Behavior ? out.behavior_keep : out.function_keep;
            keep.insert(keep.end(), items.begin(), items.end());
        } else if (std::regex_match(t, m, group_re)) {
            MergeGroup g{trim(m[1].str()), parse_bracket_list(m[2].str(), line.offset)};
            if (g.primary.size() >= 2 && g.primary.front() == '<' && g.primary.back() == '>')
                g.primary = trim(g.primary.substr(1, g.primary.size() - 2));
            if (section == Section::Behavior)
                out.behavior[attribute].push_back(std::move(g));
            else
                out.functions.push_back(std::move(g));
        } else if (section == Section::Behavior && std::regex_match(t, m, attr_re)) {
            attribute = trim(m[1].str());
        } else {
            malformed(line.offset, "unexpected line '" + t + "' in dedup output");
        }
    }
    if (!saw_behavior && !saw_function) malformed(0, "no BEHAVIOR_REDUNDANCY or FUNCTION_REDUNDANCY section");
    return out;
}

std::string parse_function_description(std::string_view raw) {
    require_nonblank(raw);
    std::string_view t = raw;
    const std::size_t d = t.find("Description:");
    if (d != std::string_view::npos) t = t.substr(d + 12);
    std::string out = trim(t);
    if (out.empty()) fail(ErrorCode::EmptyOracleOutput, "description is empty");
    return out;
}

std::string format_behavior_abstraction(const ParsedPattern& p) {
    auto line = [](const char* key, const std::string& tok, const std::string& note) {
        return note.empty() ? fmt::format("- {}: {}\n", key, tok) : fmt::format("- {}: {} ({})\n", key, tok, note);
    };
    return "'''\nPattern:\n" + line("speed_pattern", p.speed, p.speed_note) +
           line("course_pattern", p.course, p.course_note) + line("heading_pattern", p.heading, p.heading_note) +
           line("intent", p.intent, p.intent_note) + "'''\n";
}

std::string format_method_builder(const ParsedFunction& f) {
    std::string out = "Function:\n'''\n" + format_function_block(f.func) + "'''\n";
    if (!f.description.empty()) out += "Description: " + f.description + "\n";
    return out;
}

std::string format_behavior_selection(const ParsedBehaviorSelection& p) {
    return fmt::format("'''\nSelected Movement ID: Movement_Pattern_{}\nGraph Support: {}\nContextual Justification: {}\n'''\n",
                       p.selected, p.graph_support, p.contextual_justification);
}

std::string format_method_selection(const ParsedMethodSelection& p) {
    return fmt::format("'''\nSelected Function ID: Function_{}\nStatistical Support: {}\nReasoning: {}\n'''\n", p.selected,
                       p.statistical_support, p.reasoning);
}

std::string format_explanation(const ParsedExplanation& p) {
    return fmt::format("'''\nRegulatory Rule Cue: {}\nOperational Protocol Rationale: {}\n'''\n", p.regulatory_rule_cue,
                       p.operational_protocol_rationale);
}

std::string format_dedup(const ParsedDedup& p) {
    std::string out = "BEHAVIOR_REDUNDANCY:\n";
    for (const auto& [attr, groups] : p.behavior) {
        out += "[" + attr + "]:\n";
        for (const auto& g : groups) out += "- " + g.primary + " | [" + join(g.redundant) + "]\n";
    }
    out += "KEEP_UNIQUE: [" + join(p.behavior_keep) + "]\n";
    out += "FUNCTION_REDUNDANCY:\n";
    for (const auto& g : p.functions) out += "- " + g.primary + " | [" + join(g.redundant) + "]\n";
    out += "KEEP_UNIQUE: [" + join(p.function_keep) + "]\n";
    return out;
}

OracleResponse call_oracle(Oracle& oracle, TemplateId id, Variables vars) {
    OracleRequest req{id, std::move(vars), true};
    OracleResponse resp = oracle.call(req);
    require_nonblank(resp.raw);
    return resp;
}

}  // namespace vista
