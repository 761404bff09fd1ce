#pragma once

#include <cmath>

#include "curv2d/errors.hpp"

namespace curv2d {

using std::atan;
using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;
using std::tan;

inline double primal_value(double x) { return x; }

/// First-order dual number over an arbitrary scalar ring T. Nesting
/// Dual<Dual<...>> yields exact higher mixed derivatives by forward mode.
template <class T>
struct Dual {
    T v{};  // value
    T d{};  // derivative part

    constexpr Dual() = default;
    constexpr Dual(double s) : v(s), d() {}
    constexpr Dual(const T& value, const T& deriv) : v(value), d(deriv) {}

    friend constexpr Dual operator+(const Dual& a) { return a; }
    friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

    friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
    friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
    friend constexpr Dual operator*(const Dual& a, const Dual& b)
    {
        return {a.v * b.v, a.v * b.d + a.d * b.v};
    }
    friend constexpr Dual operator/(const Dual& a, const Dual& b)
    {
        const T q = a.v / b.v;
        return {q, (a.d - q * b.d) / b.v};
    }

    Dual& operator+=(const Dual& o) { return *this = *this + o; }
    Dual& operator-=(const Dual& o) { return *this = *this - o; }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }

    friend Dual sin(const Dual& x) { return {sin(x.v), cos(x.v) * x.d}; }
    friend Dual cos(const Dual& x) { return {cos(x.v), -(sin(x.v) * x.d)}; }
    friend Dual tan(const Dual& x)
    {
        const T t = tan(x.v);
        return {t, (T(1.0) + t * t) * x.d};
    }
    friend Dual exp(const Dual& x)
    {
        const T e = exp(x.v);
        return {e, e * x.d};
    }
    friend Dual log(const Dual& x)
    {
        if (!(primal_value(x.v) > 0.0))
            throw Error(Errc::evaluation_failed, "log of non-positive value");
        return {log(x.v), x.d / x.v};
    }
    friend Dual sqrt(const Dual& x)
    {
        if (!(primal_value(x.v) > 0.0))
            throw Error(Errc::evaluation_failed, "sqrt of non-positive value");
        const T r = sqrt(x.v);
        return {r, x.d / (T(2.0) * r)};
    }
    friend Dual atan(const Dual& x) { return {atan(x.v), x.d / (T(1.0) + x.v * x.v)}; }
};

template <class T>
double primal_value(const Dual<T>& x)
{
    return primal_value(x.v);
}

/// x^n for integer n, by repeated squaring; n < 0 uses the reciprocal.
template <class T>
T pow_int(const T& x, int n)
{
    if (n == 0) return T(1.0);
    if (n < 0 && primal_value(x) == 0.0)
        throw Error(Errc::evaluation_failed, "zero base with negative integer exponent");
    unsigned long e = n < 0 ? -static_cast<long>(n) : static_cast<long>(n);
    T base = x;
    T acc = T(1.0);
    while (e) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
    }
    if (n < 0) return T(1.0) / acc;
    return acc;
}

template <int N>
struct DualDepth {
    using type = Dual<typename DualDepth<N - 1>::type>;
};
template <>
struct DualDepth<0> {
    using type = double;
};
template <int N>
using DualN = typename DualDepth<N>::type;

/// Lifts coordinate value x of variable `var` into a depth-N dual whose
/// level-l derivative slot is seeded iff dirs[l] == var. Level 0 is the
/// innermost dual, level N-1 the outermost.
template <int N>
DualN<N> seed_coord(double x, int var, const int* dirs)
{
    if constexpr (N == 0) {
        (void)var;
        (void)dirs;
        return x;
    } else {
        DualN<N - 1> value = seed_coord<N - 1>(x, var, dirs);
        DualN<N - 1> deriv = dirs[N - 1] == var ? DualN<N - 1>(1.0) : DualN<N - 1>(0.0);
        return {value, deriv};
    }
}

/// Extracts the component of a depth-N dual selected by `mask`: bit l set
/// means take the derivative slot at level l, otherwise the value slot.
template <int N>
double dual_component(const DualN<N>& x, unsigned mask)
{
    if constexpr (N == 0) {
        (void)mask;
        return x;
    } else {
        constexpr unsigned bit = 1u << (N - 1);
        if (mask & bit) return dual_component<N - 1>(x.d, mask & ~bit);
        return dual_component<N - 1>(x.v, mask);
    }
}

}  // namespace curv2d
