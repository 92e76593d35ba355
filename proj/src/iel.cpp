#include "vista/iel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>

#include <fmt/format.h>

#include "vista/error.hpp"

namespace vista::iel {

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Atan2, Sqrt, Min, Max, Clamp, Abs, Sinc };

struct Expression::Node {
    Op op = Op::Const;
    double value = 0.0;
    std::size_t slot = 0;
    int a = -1, b = -1, c = -1;
};

namespace {

struct FunctionInfo {
    std::string_view name;
    Op op;
    int arity;
};

constexpr std::array<FunctionInfo, 11> kFunctions = {{
    {"pow", Op::Pow, 2},
    {"sin", Op::Sin, 1},
    {"cos", Op::Cos, 1},
    {"tan", Op::Tan, 1},
    {"atan2", Op::Atan2, 2},
    {"sqrt", Op::Sqrt, 1},
    {"min", Op::Min, 2},
    {"max", Op::Max, 2},
    {"clamp", Op::Clamp, 3},
    {"abs", Op::Abs, 1},
    {"sinc", Op::Sinc, 1},
}};

const FunctionInfo* find_function(std::string_view name) {
    for (const auto& f : kFunctions)
        if (f.name == name) return &f;
    return nullptr;
}

}  // namespace

class Parser {
public:
    Parser(std::string_view src, std::span<const std::string> params) : src_(src), params_(params) {}

    Expression run() {
        Expression e;
        e.source_ = std::string(src_);
        e.slot_count_ = kFirstParam + params_.size();
        skip_ws();
        if (pos_ == src_.size()) error("empty expression");
        int root = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) error(fmt::format("unexpected '{}'", src_[pos_]));
        e.root_ = root;
        e.nodes_ = std::make_shared<const std::vector<Expression::Node>>(std::move(nodes_));
        return e;
    }

private:
    using Node = Expression::Node;

    std::string_view src_;
    std::span<const std::string> params_;
    std::size_t pos_ = 0;
    std::vector<Node> nodes_;
    int depth_ = 0;

    [[noreturn]] void error(const std::string& what) const {
        fail(ErrorCode::UnsupportedConstruct, fmt::format("IEL at offset {}: {} in \"{}\"", pos_, what, src_));
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(Node n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size() - 1);
    }

    int binary(Op op, int a, int b) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        return add(n);
    }

    int parse_expr() {
        if (++depth_ > 200) error("expression nested too deeply");
        int lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = binary(Op::Add, lhs, parse_term());
            else if (accept('-')) lhs = binary(Op::Sub, lhs, parse_term());
            else break;
        }
        --depth_;
        return lhs;
    }

    int parse_term() {
        int lhs = parse_unary();
        for (;;) {
            skip_ws();
            // '**' is a Python power operator, not IEL.
            if (pos_ + 1 < src_.size() && src_[pos_] == '*' && src_[pos_ + 1] == '*') error("'**' is not supported");
            if (accept('*')) lhs = binary(Op::Mul, lhs, parse_unary());
            else if (accept('/')) lhs = binary(Op::Div, lhs, parse_unary());
            else break;
        }
        return lhs;
    }

    int parse_unary() {
        if (accept('-')) {
            if (++depth_ > 200) error("expression nested too deeply");
            Node n;
            n.op = Op::Neg;
            n.a = parse_unary();
            --depth_;
            return add(n);
        }
        if (accept('+')) return parse_unary();
        return parse_primary();
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) error("unexpected end of expression");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = parse_expr();
            if (!accept(')')) error("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        error(fmt::format("unexpected '{}'", c));
    }

    int parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
                pos_ = p;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        const std::string text(src_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size() || !std::isfinite(v)) {
            pos_ = start;
            error("malformed number '" + text + "'");
        }
        Node n;
        n.op = Op::Const;
        n.value = v;
        return add(n);
    }

    int parse_name() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            const FunctionInfo* fn = find_function(name);
            if (!fn) {
                pos_ = start;
                error("unknown function '" + std::string(name) + "'");
            }
            ++pos_;
            std::vector<int> args;
            if (!accept(')')) {
                do {
                    args.push_back(parse_expr());
                } while (accept(','));
                if (!accept(')')) error("expected ')' after arguments");
            }
            if (static_cast<int>(args.size()) != fn->arity)
                error(fmt::format("{} expects {} argument(s), got {}", fn->name, fn->arity, args.size()));
            Node n;
            n.op = fn->op;
            n.a = args[0];
            if (args.size() > 1) n.b = args[1];
            if (args.size() > 2) n.c = args[2];
            return add(n);
        }
        for (std::size_t i = 0; i < kVariableNames.size(); ++i) {
            if (kVariableNames[i] == name) {
                Node n;
                n.op = Op::Var;
                n.slot = i;
                return add(n);
            }
        }
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (params_[i] == name) {
                Node n;
                n.op = Op::Var;
                n.slot = kFirstParam + i;
                return add(n);
            }
        }
        pos_ = start;
        error("unknown identifier '" + std::string(name) + "'");
    }
};

Expression Expression::compile(std::string_view source, std::span<const std::string> param_names) {
    for (const auto& p : param_names)
        if (!is_valid_param_name(p)) fail(ErrorCode::UnsupportedConstruct, "invalid parameter name '" + p + "'");
    return Parser(source, param_names).run();
}

double Expression::evaluate(std::span<const double> slots) const {
    if (!nodes_) fail(ErrorCode::EvaluationError, "empty expression");
    if (slots.size() < slot_count_)
        fail(ErrorCode::EvaluationError, fmt::format("expected {} slots, got {}", slot_count_, slots.size()));
    const double v = eval(root_, slots);
    if (!std::isfinite(v)) fail(ErrorCode::EvaluationError, "non-finite result from \"" + source_ + "\"");
    return v;
}

double Expression::eval(int index, std::span<const double> slots) const {
    const Node& n = (*nodes_)[static_cast<std::size_t>(index)];
    auto A = [&] { return eval(n.a, slots); };
    auto B = [&] { return eval(n.b, slots); };
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return slots[n.slot];
        case Op::Neg: return -A();
        case Op::Add: return A() + B();
        case Op::Sub: return A() - B();
        case Op::Mul: return A() * B();
        case Op::Div: {
            const double num = A();
            const double den = B();
            if (den == 0.0) fail(ErrorCode::EvaluationError, "division by zero in \"" + source_ + "\"");
            return num / den;
        }
        case Op::Pow: return std::pow(A(), B());
        case Op::Sin: return std::sin(A());
        case Op::Cos: return std::cos(A());
        case Op::Tan: return std::tan(A());
        case Op::Atan2: return std::atan2(A(), B());
        case Op::Sqrt: return std::sqrt(A());
        case Op::Min: return std::min(A(), B());
        case Op::Max: return std::max(A(), B());
        case Op::Clamp: {
            const double x = A(), lo = B(), hi = eval(n.c, slots);
            return std::min(std::max(x, lo), hi);
        }
        case Op::Abs: return std::abs(A());
        case Op::Sinc: {
            const double x = A();
            return x == 0.0 ? 1.0 : std::sin(x) / x;
        }
    }
    return std::nan("");
}

bool is_valid_param_name(std::string_view name) {
    if (name.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
    if (!std::all_of(name.begin(), name.end(),
                     [](unsigned char c) { return std::isalnum(c) || c == '_'; }))
        return false;
    if (std::find(kVariableNames.begin(), kVariableNames.end(), name) != kVariableNames.end()) return false;
    return find_function(name) == nullptr;
}

}  // namespace vista::iel
