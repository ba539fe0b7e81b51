#include "pilotwave/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "pilotwave/error.hpp"

namespace pilotwave {

struct Expression::Node {
    enum class Op { constant, var_x, var_y, var_z, var_t, add, sub, mul, div, neg, sin, cos, exp, sqrt, atan2 };
    Op op = Op::constant;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;
using Op = Node::Op;

NodePtr leaf(Op op, double value = 0.0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    return n;
}

NodePtr branch(Op op, NodePtr lhs, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        auto root = expression();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected character");
        return root;
    }

    bool uses_time = false;

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ValidationError("expression: " + what + " at position " + std::to_string(pos_ + 1) + " in \"" +
                              std::string(text_) + "\"");
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr expression() {
        auto lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = branch(Op::add, lhs, term());
            } else if (accept('-')) {
                lhs = branch(Op::sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*')) {
                lhs = branch(Op::mul, lhs, unary());
            } else if (accept('/')) {
                lhs = branch(Op::div, lhs, unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) return branch(Op::neg, unary());
        if (accept('+')) return unary();
        return primary();
    }

    NodePtr primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (accept('(')) {
            auto inner = expression();
            expect(')');
            return inner;
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (text_.substr(pos_, 2) == "\xCF\x80") {  // UTF-8 pi
            pos_ += 2;
            return leaf(Op::constant, std::numbers::pi);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        fail("unexpected character");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        double value = 0.0;
        const auto* first = text_.data() + start;
        const auto* last = text_.data() + pos_;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last) {
            pos_ = start;
            fail("malformed number");
        }
        return leaf(Op::constant, value);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        if (name == "x") return leaf(Op::var_x);
        if (name == "y") return leaf(Op::var_y);
        if (name == "z") return leaf(Op::var_z);
        if (name == "t") {
            uses_time = true;
            return leaf(Op::var_t);
        }
        if (name == "pi") return leaf(Op::constant, std::numbers::pi);
        Op fn;
        if (name == "sin") {
            fn = Op::sin;
        } else if (name == "cos") {
            fn = Op::cos;
        } else if (name == "exp") {
            fn = Op::exp;
        } else if (name == "sqrt") {
            fn = Op::sqrt;
        } else if (name == "atan2") {
            expect('(');
            auto a = expression();
            expect(',');
            auto b = expression();
            expect(')');
            return branch(Op::atan2, a, b);
        } else {
            pos_ = start;
            fail("unknown identifier '" + std::string(name) + "'");
        }
        expect('(');
        auto arg = expression();
        expect(')');
        return branch(fn, arg);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

double eval(const Node& n, const ExpressionVariables& v) {
    switch (n.op) {
        case Op::constant: return n.value;
        case Op::var_x: return v.x;
        case Op::var_y: return v.y;
        case Op::var_z: return v.z;
        case Op::var_t: return v.t;
        case Op::add: return eval(*n.lhs, v) + eval(*n.rhs, v);
        case Op::sub: return eval(*n.lhs, v) - eval(*n.rhs, v);
        case Op::mul: return eval(*n.lhs, v) * eval(*n.rhs, v);
        case Op::div: return eval(*n.lhs, v) / eval(*n.rhs, v);
        case Op::neg: return -eval(*n.lhs, v);
        case Op::sin: return std::sin(eval(*n.lhs, v));
        case Op::cos: return std::cos(eval(*n.lhs, v));
        case Op::exp: return std::exp(eval(*n.lhs, v));
        case Op::sqrt: return std::sqrt(eval(*n.lhs, v));
        case Op::atan2: return std::atan2(eval(*n.lhs, v), eval(*n.rhs, v));
    }
    return 0.0;
}

}  // namespace

Expression Expression::parse(std::string_view text) {
    Parser parser(text);
    Expression e;
    e.root_ = parser.parse();
    e.source_ = std::string(text);
    e.uses_time_ = parser.uses_time;
    return e;
}

double Expression::evaluate(const ExpressionVariables& vars) const { return eval(*root_, vars); }

RealField sample_expression(const Expression& expr, const GridSpec& grid, double t) {
    RealField out(grid, t);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const Point p = grid.position(j);
        out.values[j] = expr.evaluate({p[0], p[1], p[2], t});
    }
    require_finite(out, ("expression \"" + expr.source() + "\"").c_str());
    return out;
}

}  // namespace pilotwave
