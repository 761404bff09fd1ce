#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "curv2d/dual.hpp"
#include "curv2d/errors.hpp"

namespace curv2d {

/// Immutable expression tree over the variables q1, q2, u.
///
/// Grammar: decimal literals, identifiers q1|q2|u, binary + - * / ^
/// (^ with constant integer exponent), unary -, functions
/// sin cos tan exp log sqrt atan, parentheses. Whitespace insignificant.
struct Expr {
    enum class Op { constant, variable, add, sub, mul, div, neg, pow_int, call };
    enum class Fn { sin, cos, tan, exp, log, sqrt, atan };

    Op op{};
    double value = 0.0;  // constant
    int var = -1;        // 0 = q1, 1 = q2, 2 = u
    int exponent = 0;    // pow_int
    Fn fn{};             // call
    std::shared_ptr<const Expr> a, b;
};

using ExprPtr = std::shared_ptr<const Expr>;

/// Parses an expression; throws Error(syntax_error) or
/// Error(unknown_identifier) with a "line L, column C" location in the
/// message.
ExprPtr parse_expression(std::string_view source);

/// True if the expression references the control variable u.
bool depends_on_u(const Expr& e);

template <class T>
T eval_expr(const Expr& e, const T& q1, const T& q2, const T& u)
{
    switch (e.op) {
        case Expr::Op::constant: return T(e.value);
        case Expr::Op::variable: return e.var == 0 ? q1 : (e.var == 1 ? q2 : u);
        case Expr::Op::add: return eval_expr(*e.a, q1, q2, u) + eval_expr(*e.b, q1, q2, u);
        case Expr::Op::sub: return eval_expr(*e.a, q1, q2, u) - eval_expr(*e.b, q1, q2, u);
        case Expr::Op::mul: return eval_expr(*e.a, q1, q2, u) * eval_expr(*e.b, q1, q2, u);
        case Expr::Op::div: return eval_expr(*e.a, q1, q2, u) / eval_expr(*e.b, q1, q2, u);
        case Expr::Op::neg: return -eval_expr(*e.a, q1, q2, u);
        case Expr::Op::pow_int: return pow_int(eval_expr(*e.a, q1, q2, u), e.exponent);
        case Expr::Op::call: {
            T x = eval_expr(*e.a, q1, q2, u);
            switch (e.fn) {
                case Expr::Fn::sin: return sin(x);
                case Expr::Fn::cos: return cos(x);
                case Expr::Fn::tan: return tan(x);
                case Expr::Fn::exp: return exp(x);
                case Expr::Fn::log: return log(x);
                case Expr::Fn::sqrt: return sqrt(x);
                case Expr::Fn::atan: return atan(x);
            }
        }
    }
    throw Error(Errc::evaluation_failed, "malformed expression node");
}

/// Partial derivative of the expression in q1^i q2^j u^k, evaluated at a
/// T-valued point by stacking i+j+k extra dual levels on top of T.
template <int I, int J, int K, class T>
T expr_partial(const Expr& e, const T& q1, const T& q2, const T& u)
{
    if constexpr (I + J + K == 0) {
        return eval_expr(e, q1, q2, u);
    } else if constexpr (I > 0) {
        Dual<T> r = expr_partial<I - 1, J, K>(e, Dual<T>(q1, T(1.0)), Dual<T>(q2, T(0.0)),
                                              Dual<T>(u, T(0.0)));
        return r.d;
    } else if constexpr (J > 0) {
        Dual<T> r = expr_partial<I, J - 1, K>(e, Dual<T>(q1, T(0.0)), Dual<T>(q2, T(1.0)),
                                              Dual<T>(u, T(0.0)));
        return r.d;
    } else {
        Dual<T> r = expr_partial<I, J, K - 1>(e, Dual<T>(q1, T(0.0)), Dual<T>(q2, T(0.0)),
                                              Dual<T>(u, T(1.0)));
        return r.d;
    }
}

}  // namespace curv2d
