#include <array>
#include <string_view>

#include "vista/error.hpp"
#include "vista/oracle.hpp"

namespace vista {

namespace {

constexpr std::string_view kBehaviorAbstraction = R"([TASK]
You are an expert in maritime data analysis.
Your task is to generate a list of specific, interpretable patterns that describe how both latitude and longitude (vessel positions) can be inferred from a set of AIS features.
These patterns will be used to impute missing values of latitude and longitude in AIS data. Each pattern must be:
- Concrete and usable: describing a clear condition on the target features and the corresponding position range;
- Simultaneous: including both latitude and longitude ranges, or describing a trajectory pattern (e.g., a curved path, straight line, or repeated loop);
- Explainable, with a short justification after each pattern explaining why this condition relates to the given position;
- Mathematically expressive: including a possible trajectory equation or shape that approximates the vessel's movement under this condition.
[INPUT]
You are given by:
- A sample of trajectory data (latitude, longitude, and various AIS features): {trajectory_data}
[OUTPUT]
Please strictly follow the following format, return only one pattern, and output all patterns in triple quotes:
'''
Pattern:
- speed_pattern: speed profile without numerical values and punctuation (detailed description for speed profile).
- course_pattern: change in course over ground without numerical values and punctuation (detailed description for change in course over ground).
- heading_pattern: heading fluctuation without numerical values and punctuation (detailed description for heading fluctuation).
- intent: inferred maneuver intention without numerical values and punctuation (detailed description for inferred maneuver intention).
'''
For speed_pattern, You can choose from {speed_dict}, and if you don't have a suitable one, you can create a new one.
For course_pattern, You can choose from {course_dict}, and if you don't have a suitable one, you can create a new one.
For heading_pattern, You can choose from {heading_dict}, and if you don't have a suitable one, you can create a new one.
For intent, You can choose from {intent_dict}, and if you don't have a suitable one, you can create a new one.
[EXAMPLE]
'''
Pattern:
- speed_pattern: stable (the vessel is maintaining a consistent speed, not accelerating or decelerating)
- course_pattern: stable (the vessel is maintaining a consistent course over ground)
- heading_pattern: stable (the heading does not fluctuate significantly, indicating no sharp maneuvers)
- intent: navigating (the vessel is maintaining its course)
'''
Make sure that your output strictly follows this format. Any patterns that do not adhere to this structure should be adjusted to fit the template. If any pattern involves multiple segments, please aggregate them.
)";

constexpr std::string_view kMethodBuilder = R"([TASK]
You are an expert in maritime trajectory analysis and spatial-temporal modeling, specialized in developing interpretable algorithms for vessel movement reconstruction. You are given vessel trajectory data and are asked to generate a spatial_function that estimates missing latitude and longitude positions based on known trajectory features and motion patterns.
You need to adhere requirements:
- The spatial_function is a pair of arithmetic expressions, one for latitude and one for longitude, written in the expression language described below. Arbitrary code is not accepted.
- The spatial_function is encouraged to choose from a variety of path models, not just linear interpolation.
- The spatial_function must compute each intermediate point from the boundary positions and the elapsed time:
  - lat0, lon0: the geographic coordinates immediately before the missing data block.
  - lat1, lon1: the geographic coordinates immediately after the missing data block.
  - dt_total: seconds between the point before and the point after the missing block.
  - u: elapsed time since the point before the block divided by dt_total (0 at the point before, 1 at the point after).
- Expression language: numbers, + - * / and unary minus, parentheses, and the functions pow(a,b), sin, cos, tan, atan2(y,x), sqrt, min(a,b), max(a,b), clamp(x,lo,hi), abs, sinc (sinc(0)=1). Angles are in radians. Named constants may be declared under params and used by name.
[INPUT]
You are given by:
- trajectory: {trajectory_data}.
- behavior pattern of trajectory: {pattern}.
[OUTPUT]
Please strictly follow the following format:
Function:
'''
family: <short name of the path model>
params: <name=value, name=value, or none>
lat: <expression>
lon: <expression>
'''
Description: A brief explanation of what this function does, including how it uses the input parameters.
[EXAMPLE]
'''
family: linear
params: none
lat: lat0*(1 - u) + lat1*u
lon: lon0*(1 - u) + lon1*u
'''
Description: Straight-line interpolation between the boundary positions at constant speed.
{feedback_text_description}
)";

constexpr std::string_view kBehaviorSelect = R"([TASK]
You are an expert maritime behavior analyst, specialized in interpreting vessel movement patterns and reasoning over graph-based representations of AIS knowledge. You need to select the most plausible movement (behavior pattern) for the current gap. Specifically, the process is as follow:
- Analyze the boundary movement patterns and DOT graph structure, then rely on their evidence weights to shortlist Top-{top_k} movements.
- Choose ONE final movement ID for the gap.
- Provide a two-part rationale:
  1. Graph Support: cite the most informative vessel->movement edges (IDs/weights) that support your choice.
  2. Contextual Justification: explain consistency with boundary movement patterns (before and after the gap) and the gap's boundary conditions.
- Output in the following block (no extra text):
[INPUT]
You are given by:
- Boundary movement patterns (behavior patterns extracted from adjacent segments on both sides of the missing block):
{boundary_text}
- Induced subgraph in DOT (vessel->movement and movement->function edges with weights):
{dot_text}
- Candidate movements (with tokens, graph priors and used edges):
{movement_text}
- Contextual static attributes inferred from neighboring segments (vessel nodes):
{context_vessels}
[OUTPUT]
Please strictly follow the following format:
'''
Selected Movement ID: <ID>
Graph Support: <edges and weights you rely on>
Contextual Justification: <why consistent with boundary context>
'''
)";

constexpr std::string_view kMethodSelect = R"([TASK] You are an expert in maritime spatial-temporal modeling and trajectory reconstruction, responsible for evaluating and selecting the most suitable spatial function for accurate AIS trajectory imputation. Please select the most suitable spatial function for imputing missing latitude and longitude.
You need to adhere following requirements:
- Direction: Which function has proven most reliable for similar kinematic patterns?
- Direction: Does the function's underlying model (e.g., linear, curved) logically match the identified movement pattern (e.g., curved, straight)?
- Direction: Which function works best across different but related movement patterns?
- Direction: How well does each function handle the specific speed/course/heading characteristics?
- Important: When providing Statistical Support, ONLY discuss statistical evidence --- DO NOT mention any edge-weights and graph but you could turn it to statistical describe.
- Important: Based on the calculation of weight proportions, all probabilities must be supported by evidence and cannot be arbitrarily fabricated. Each probability should be followed by its calculation process.
- Important: Avoid repeating, movement pattern analysis --- focus on function execution quality.
[INPUT] You are given by:
- Induced subgraph in DOT (Interpret weights as association frequencies):
{dot_text}
- Functions with detailed information:
{functions_text}
- behavior pattern that may correspond to missing parts:
{movement_text}
- AIS data of the neighboring segments:
{rows_text}
[OUTPUT]
Please strictly follow the following format:
'''
Selected Function ID: <ID>
Statistical Support: <Don't describe the edge weight, Don't describe the graph support but you could turn it to statistical describe. 1. Introduce the probability that this function can solve the missing value problem corresponding to the behavior pattern (Based on the calculation of weight proportions, all probabilities must be supported by evidence and cannot be arbitrarily fabricated. Each probability should be followed by its calculation process.). 2. Introduce the characteristics of this function and its degree of matching with the current context.>
Reasoning: <why this function technically fits the kinematic requirements>
'''
)";

constexpr std::string_view kExplain = R"([TASK]
You are an expert in maritime behavior interpretation and regulatory reasoning, specialized in translating computational decisions into human-understandable explanations for vessel trajectory analysis. Produce a human-friendly explanation for the chosen behavior and method. You need to adhere following requirements:
- Do NOT mention any node IDs or labels such as "Movement_Pattern_*" or "vessel_*".
- Refer ONLY to the concrete attributes and descriptions provided below.
[INPUT]
You are given by:
- Induced subgraph in DOT:
{dot_text}
- Selected movement (expanded):
{movement_desc}
- Selected imputation method (expanded):
{function_desc}
- Contextual vessel attributes (expanded list):
{vessels_desc_block}
- Contextual behavior pattern:
{vessels_behavior_pattern}
[OUTPUT]
Please strictly follow the following format:
'''
Regulatory Rule Cue: <rule label + applicability + spatial anchor; leave Undetermined if insufficient>
Operational Protocol Rationale: <why this behavior is typical here; align with the spatial context; rule out key alternatives; do not mention IDs>
'''
)";

constexpr std::string_view kDedup = R"([TASK]
You are an expert in maritime knowledge consolidation and redundancy analysis, specializing in detecting and merging semantically equivalent vessel behavior patterns and imputation functions.
You need to adhere following requirements:
For Behavior Pattern:
- Exact duplicates: identical text
- Semantic equivalents: same meaning, different wording
- Minor variations: slight wording differences
- Overly specific terms: very detailed descriptions
- Contextual synonyms: same meaning in maritime context
For Imputation Function:
- Functional equivalence: different implementations but same mathematical function
- Algorithmic similarity: same core algorithm with minor variations
- Parameter differences: same logic with different parameter values
- Code restructuring: same functionality with different code structure
[INPUT]
You are given by:
- Behavior patterns to analyze:
{vb_data_text}
- Spatial functions to analyze:
{vf_data_text}
[OUTPUT]
Please strictly follow the following format:
For behavior patterns:
BEHAVIOR_REDUNDANCY:
[attribute_name]:
- <primary_term1> | [<redundant_term1>, <redundant_term2>]
- <primary_term2> | [<redundant_term3>, <redundant_term4>]
KEEP_UNIQUE: [<term1>, <term2>, <term3>]
For spatial functions:
FUNCTION_REDUNDANCY:
- <primary_function_id_or_code> | [<redundant_function_id_or_code1>, <redundant_function_id_or_code2>]
- <primary_function_id_or_code> | [<redundant_function_id_or_code3>]
KEEP_UNIQUE: [<function_id_or_code1>, <function_id_or_code2>]
Focus on maritime behavior semantics and functional equivalence. Preserve meaningful distinctions.
)";

constexpr std::string_view kFunctionDescription = R"([TASK]
You are an expert in maritime trajectory reconstruction. Write a short description of the imputation function below for a knowledge base. State its intended use, its key assumptions and the meaning of each parameter. Do not restate the expressions.
[INPUT]
- Function:
{function_text}
- Behavior pattern it was built for: {pattern}
[OUTPUT]
Description: <one paragraph>
)";

constexpr std::array<std::pair<TemplateId, std::string_view>, 7> kTemplates = {{
    {TemplateId::BehaviorAbstraction, kBehaviorAbstraction},
    {TemplateId::MethodBuilder, kMethodBuilder},
    {TemplateId::BehaviorSelect, kBehaviorSelect},
    {TemplateId::MethodSelect, kMethodSelect},
    {TemplateId::Explain, kExplain},
    {TemplateId::Dedup, kDedup},
    {TemplateId::FunctionDescription, kFunctionDescription},
}};

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls fn(name, begin, end) for each {name} placeholder.
template <class Fn>
void scan_placeholders(std::string_view text, Fn&& fn) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < text.size() && is_name_char(text[j])) ++j;
        if (j > i + 1 && j < text.size() && text[j] == '}') {
            fn(text.substr(i + 1, j - i - 1), i, j + 1);
            i = j;
        }
    }
}

}  // namespace

std::string_view to_string(TemplateId id) noexcept {
    switch (id) {
        case TemplateId::BehaviorAbstraction: return "behavior_abstraction";
        case TemplateId::MethodBuilder: return "method_builder";
        case TemplateId::BehaviorSelect: return "behavior_select";
        case TemplateId::MethodSelect: return "method_select";
        case TemplateId::Explain: return "explain";
        case TemplateId::Dedup: return "dedup";
        case TemplateId::FunctionDescription: return "function_description";
    }
    return "unknown";
}

TemplateId template_id_from_string(std::string_view text) {
    for (const auto& [id, body] : kTemplates)
        if (to_string(id) == text) return id;
    fail(ErrorCode::ConfigError, "unknown template id '" + std::string(text) + "'");
}

std::string_view template_text(TemplateId id) {
    for (const auto& [tid, body] : kTemplates)
        if (tid == id) return body;
    fail(ErrorCode::TemplateError, "no template for id");
}

std::vector<std::string> template_placeholders(TemplateId id) {
    std::vector<std::string> names;
    scan_placeholders(template_text(id), [&](std::string_view name, std::size_t, std::size_t) {
        for (const auto& n : names)
            if (n == name) return;
        names.emplace_back(name);
    });
    return names;
}

std::string render(TemplateId id, const Variables& vars) {
    const std::string_view text = template_text(id);
    const auto names = template_placeholders(id);
    for (const auto& [name, value] : vars) {
        bool known = false;
        for (const auto& n : names) known = known || n == name;
        if (!known)
            fail(ErrorCode::TemplateError,
                 "variable '" + name + "' is not a placeholder of " + std::string(to_string(id)));
    }
    std::string out;
    std::size_t last = 0;
    scan_placeholders(text, [&](std::string_view name, std::size_t begin, std::size_t end) {
        auto it = vars.find(std::string(name));
        if (it == vars.end())
            fail(ErrorCode::TemplateError,
                 "unbound placeholder {" + std::string(name) + "} in " + std::string(to_string(id)));
        out.append(text.substr(last, begin - last));
        out += it->second;
        last = end;
    });
    out.append(text.substr(last));
    return out;
}

}  // namespace vista
