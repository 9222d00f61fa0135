#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dualgen/state_space.hpp"

namespace dualgen {

struct ExprNode;

/**
 * Small arithmetic expression over x1..xd.
 *
 * Grammar: + - * / ^, unary minus, parentheses, numbers, the constant pi and
 * the functions exp log abs pow min max sin cos sqrt. In one dimension `x`
 * is accepted for x1. Derivatives are symbolic, never finite differences.
 */
class Expr {
public:
    Expr();  // the constant 0
    static Expr constant(double c);
    static Expr variable(std::size_t index);  // 0-based
    // Throws ExpressionParseError carrying the character offset.
    static Expr parse(const std::string& text, std::size_t dim);

    double operator()(const Vec& x) const;
    double eval1(double x) const;  // scalar convenience for 1-D fields
    Expr derivative(std::size_t var) const;
    // Replaces variable i by vars[i].
    Expr substitute(const std::vector<Expr>& vars) const;
    bool depends_on(std::size_t var) const;
    bool is_constant() const;
    std::string str() const;
    // Original source text when parsed, otherwise the printed form.
    const std::string& source() const { return source_; }

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);

    explicit Expr(std::shared_ptr<const ExprNode> node);
    const std::shared_ptr<const ExprNode>& node() const { return node_; }

private:
    std::shared_ptr<const ExprNode> node_;
    std::string source_;
};

}  // namespace dualgen
