#pragma once

// Imputation Expression Language: the closed arithmetic language in which
// imputation functions are written. One expression yields one coordinate as a
// function of normalised time u and the two boundary anchors.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Variables: u, lat0, lon0, lat1, lon1, dt_total, plus declared parameters.
// Functions: pow, sin, cos, tan, atan2, sqrt, min, max, clamp, abs, sinc.

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vista::iel {

enum Slot : std::size_t { kU = 0, kLat0, kLon0, kLat1, kLon1, kDtTotal, kFirstParam };

inline constexpr std::array<std::string_view, kFirstParam> kVariableNames = {"u",    "lat0", "lon0",
                                                                             "lat1", "lon1", "dt_total"};

class Expression {
public:
    /// Compiles `source`; parameter i binds to slot kFirstParam + i.
    /// Throws Error(UnsupportedConstruct) with the byte offset on failure.
    static Expression compile(std::string_view source, std::span<const std::string> param_names = {});

    /// Evaluates with the given slot values. Throws Error(EvaluationError) on
    /// division by zero or a non-finite result.
    double evaluate(std::span<const double> slots) const;

    const std::string& source() const noexcept { return source_; }

private:
    struct Node;
    Expression() = default;

    std::string source_;
    std::shared_ptr<const std::vector<Node>> nodes_;
    int root_ = -1;
    std::size_t slot_count_ = kFirstParam;

    double eval(int index, std::span<const double> slots) const;
    friend class Parser;
};

/// True when `name` is a valid parameter identifier (not a builtin variable
/// or function name).
bool is_valid_param_name(std::string_view name);

}  // namespace vista::iel
