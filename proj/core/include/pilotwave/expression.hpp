#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "pilotwave/grid.hpp"

namespace pilotwave {

/// Values bound to the free variables of an expression.
struct ExpressionVariables {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double t = 0.0;
};

/// A parsed scalar expression over x, y, z, t and pi with + - * /, unary
/// minus, parentheses and the functions sin, cos, exp, sqrt and atan2.
/// The grammar is documented in docs/expression_grammar.md.
class Expression {
public:
    struct Node;

    /// Throws ValidationError naming the offending character position.
    static Expression parse(std::string_view text);

    double evaluate(const ExpressionVariables& vars) const;
    const std::string& source() const noexcept { return source_; }
    /// True if the expression mentions t.
    bool depends_on_time() const noexcept { return uses_time_; }

private:
    std::string source_;
    std::shared_ptr<const Node> root_;
    bool uses_time_ = false;
};

/// Evaluates the expression at every grid point at time t.
RealField sample_expression(const Expression& expr, const GridSpec& grid, double t);

}  // namespace pilotwave
