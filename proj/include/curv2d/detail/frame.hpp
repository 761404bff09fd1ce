#pragma once

#include <cmath>

#include "curv2d/system.hpp"

namespace curv2d::detail {

// Scale-free zero test for 2x2 determinants: |det| < kDetTol * |v1||v2|.
inline constexpr double kDetTol = 1e-9;

template <class T>
T det2(const Vec2T<T>& a, const Vec2T<T>& b)
{
    return a.x * b.y - a.y * b.x;
}

inline double norm2(const Vec2T<double>& a) { return std::hypot(a.x, a.y); }

template <class T>
Vec2T<double> primal2(const Vec2T<T>& a)
{
    return {primal_value(a.x), primal_value(a.y)};
}

/// f and its pure u-derivatives at a point whose coordinates are T-valued.
template <class T>
struct PointData {
    Vec2T<T> f, fu, fuu;
    T det_f_fu;    // transversality determinant det(f, f_u)
    T det_fu_fuu;  // strong-convexity determinant det(f_u, f_uu)
};

/// f plus the q-derivatives of f and f_u (what the reduced extremal field
/// consumes).
template <class T>
struct ExtendedPointData : PointData<T> {
    Vec2T<T> fq1, fq2;    // d f / d q_i
    Vec2T<T> fuq1, fuq2;  // d f_u / d q_i
};

template <class T>
PointData<T> point_data(const SystemEvaluator& ev, const T& q1, const T& q2, const T& u)
{
    using D1 = Dual<T>;
    using D2 = Dual<D1>;
    const T zero(0.0), one(1.0);
    D2 Q1{D1{q1, zero}, D1{zero, zero}};
    D2 Q2{D1{q2, zero}, D1{zero, zero}};
    D2 U{D1{u, one}, D1{one, zero}};
    auto f = ev.eval(Q1, Q2, U);
    PointData<T> out;
    out.f = {f.x.v.v, f.y.v.v};
    out.fu = {f.x.v.d, f.y.v.d};
    out.fuu = {f.x.d.d, f.y.d.d};
    out.det_f_fu = det2(out.f, out.fu);
    out.det_fu_fuu = det2(out.fu, out.fuu);
    return out;
}

template <class T>
ExtendedPointData<T> extended_point_data(const SystemEvaluator& ev, const T& q1, const T& q2,
                                         const T& u)
{
    ExtendedPointData<T> out;
    static_cast<PointData<T>&>(out) = point_data(ev, q1, q2, u);
    using D1 = Dual<T>;
    using D2 = Dual<D1>;
    const T zero(0.0), one(1.0);
    {
        // inner level seeds u, outer level seeds q1
        D2 Q1{D1{q1, zero}, D1{one, zero}};
        D2 Q2{D1{q2, zero}, D1{zero, zero}};
        D2 U{D1{u, one}, D1{zero, zero}};
        auto f = ev.eval(Q1, Q2, U);
        out.fq1 = {f.x.d.v, f.y.d.v};
        out.fuq1 = {f.x.d.d, f.y.d.d};
    }
    {
        D2 Q1{D1{q1, zero}, D1{zero, zero}};
        D2 Q2{D1{q2, zero}, D1{one, zero}};
        D2 U{D1{u, one}, D1{zero, zero}};
        auto f = ev.eval(Q1, Q2, U);
        out.fq2 = {f.x.d.v, f.y.d.v};
        out.fuq2 = {f.x.d.d, f.y.d.d};
    }
    return out;
}

template <class T>
void require_transversal(const PointData<T>& pd)
{
    auto f = primal2(pd.f);
    auto fu = primal2(pd.fu);
    if (std::abs(primal_value(pd.det_f_fu)) <= kDetTol * norm2(f) * norm2(fu))
        throw Error(Errc::singular_basis,
                    "f and f_u are (near) parallel; point is on or near the abnormal locus");
}

template <class T>
void require_strongly_convex(const PointData<T>& pd)
{
    auto fu = primal2(pd.fu);
    auto fuu = primal2(pd.fuu);
    if (std::abs(primal_value(pd.det_fu_fuu)) <= kDetTol * norm2(fu) * norm2(fuu))
        throw Error(Errc::non_convex, "strong convexity fails: det(f_u, f_uu) ~ 0");
}

/// Solves the maximality system <lam, f> = eps, <lam, f_u> = 0.
template <class T>
Vec2T<T> maximizing_covector_of(const PointData<T>& pd, int eps)
{
    require_transversal(pd);
    const double e = static_cast<double>(eps);
    return {T(e) * pd.fu.y / pd.det_f_fu, T(-e) * pd.fu.x / pd.det_f_fu};
}

template <class T>
struct DecompT {
    T alpha;
    T beta;
    int eps;
};

/// Coefficients of f_uu = -eps*alpha*f - beta*f_u. With eps_request = 0 the
/// sign is chosen to make alpha > 0.
template <class T>
DecompT<T> decompose(const PointData<T>& pd, int eps_request = 0)
{
    require_transversal(pd);
    require_strongly_convex(pd);
    T coef_f = det2(pd.fuu, pd.fu) / pd.det_f_fu;   // f-coefficient of f_uu
    T coef_fu = det2(pd.f, pd.fuu) / pd.det_f_fu;   // f_u-coefficient of f_uu
    int eps = eps_request != 0 ? eps_request : (primal_value(coef_f) < 0.0 ? +1 : -1);
    DecompT<T> out;
    out.eps = eps;
    out.alpha = T(-static_cast<double>(eps)) * coef_f;
    out.beta = T(-1.0) * coef_fu;
    if (!(primal_value(out.alpha) > 0.0))
        throw Error(Errc::non_convex, "convexity coefficient alpha is not positive for eps = " +
                                          std::to_string(eps));
    return out;
}

}  // namespace curv2d::detail
