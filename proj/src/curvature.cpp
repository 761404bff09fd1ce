#include "curv2d/curvature.hpp"

#include <cmath>

#include "curv2d/io.hpp"

namespace curv2d {

using detail::decompose;
using detail::point_data;

namespace detail {

// Depth-3 points only appear in bracket code paths that are rejected at
// runtime before evaluation; this overload keeps those instantiations legal.
inline Vec3T<DualN<3>> field_eval(const VectorField3&, const Vec3T<DualN<3>>&)
{
    depth_unavailable();
}

}  // namespace detail

namespace {

template <class T>
void value_and_jacobian(const VectorField3& f, const Vec3T<T>& p, Vec3T<T>& value,
                        Vec3T<T> columns[3])
{
    for (int j = 0; j < 3; ++j) {
        Vec3T<Dual<T>> dp{Dual<T>{p.x1, T(j == 0 ? 1.0 : 0.0)},
                          Dual<T>{p.x2, T(j == 1 ? 1.0 : 0.0)},
                          Dual<T>{p.u, T(j == 2 ? 1.0 : 0.0)}};
        Vec3T<Dual<T>> r = detail::field_eval(f, dp);
        columns[j] = {r.x1.d, r.x2.d, r.u.d};
        if (j == 0) value = {r.x1.v, r.x2.v, r.u.v};
    }
}

class BracketField final : public VectorField3 {
  public:
    BracketField(FieldPtr x, FieldPtr y)
        : x_(std::move(x)), y_(std::move(y)), depth_(std::min(x_->max_depth(), y_->max_depth()) - 1)
    {
        if (depth_ < 0)
            throw Error(Errc::derivative_unavailable,
                        "bracket operands do not provide first derivatives");
    }

    int max_depth() const override { return depth_; }

    Vec3T<double> eval(const Vec3T<double>& p) const override { return impl<double>(p); }
    Vec3T<DualN<1>> eval(const Vec3T<DualN<1>>& p) const override
    {
        if (depth_ < 1) detail::depth_unavailable();
        return impl<DualN<1>>(p);
    }
    Vec3T<DualN<2>> eval(const Vec3T<DualN<2>>& p) const override
    {
        if (depth_ < 2) detail::depth_unavailable();
        return impl<DualN<2>>(p);
    }

  private:
    template <class T>
    Vec3T<T> impl(const Vec3T<T>& p) const
    {
        Vec3T<T> xv, yv;
        Vec3T<T> jx[3], jy[3];
        value_and_jacobian(*x_, p, xv, jx);
        value_and_jacobian(*y_, p, yv, jy);
        auto apply = [](const Vec3T<T> cols[3], const Vec3T<T>& w) {
            return Vec3T<T>{cols[0].x1 * w.x1 + cols[1].x1 * w.x2 + cols[2].x1 * w.u,
                            cols[0].x2 * w.x1 + cols[1].x2 * w.x2 + cols[2].x2 * w.u,
                            cols[0].u * w.x1 + cols[1].u * w.x2 + cols[2].u * w.u};
        };
        Vec3T<T> a = apply(jy, xv);  // (dY) X
        Vec3T<T> b = apply(jx, yv);  // (dX) Y
        return {a.x1 - b.x1, a.x2 - b.x2, a.u - b.u};
    }

    FieldPtr x_, y_;
    int depth_;
};

}  // namespace

FieldPtr lie_bracket(FieldPtr X, FieldPtr Y)
{
    return std::make_shared<BracketField>(std::move(X), std::move(Y));
}

CurvatureSample curvature_at(const SystemModel& system, StatePoint q, double u, int eps)
{
    auto pd = point_data<double>(system.evaluator(), q.q1, q.q2, u);
    auto dec = decompose(pd, eps);

    FieldPtr H = extremal_field(system, dec.eps);
    FieldPtr V = vertical_field(system, dec.eps);
    FieldPtr B = lie_bracket(H, lie_bracket(V, H));

    Vec3 b = B->eval(Vec3{q.q1, q.q2, u});
    double bq = std::max(std::abs(b.x1), std::abs(b.x2));
    double residual = bq / (std::abs(b.u) + 1e-6);
    if (residual > 1e-6)
        throw Error(Errc::verticality_violated,
                    "double bracket is not vertical: residual " + fmt_g17(residual));

    CurvatureSample out;
    out.q = q;
    out.u = u;
    out.kappa = b.u * std::sqrt(dec.alpha);
    out.verticality_residual = residual;
    out.epsilon = dec.eps;
    return out;
}

double curvature_series_normal(const SystemModel& system, StatePoint q, double u)
{
    const auto& info = system.builtin_info();
    if (!info || info->family != "normal_form")
        throw Error(Errc::wrong_family, "curvature series requires a normal_form builtin system");
    const Expr& a = *info->shape;

    double a2 = expr_partial<0, 1, 0>(a, q.q1, q.q2, 0.0);
    double a22 = expr_partial<0, 2, 0>(a, q.q1, q.q2, 0.0);
    double leading = -a22 - a2 * a2;
    if (depends_on_u(a) || info->eps != +1) return leading;

    double a12 = expr_partial<1, 1, 0>(a, q.q1, q.q2, 0.0);
    double e2a = std::exp(2.0 * eval_expr(a, q.q1, q.q2, 0.0));
    return leading - 3.0 * e2a * a22 * u * u - e2a * a12 * u * u * u;
}

double gaussian_curvature_conformal(const Expr& phi, StatePoint q)
{
    double lap = expr_partial<2, 0, 0>(phi, q.q1, q.q2, 0.0) +
                 expr_partial<0, 2, 0>(phi, q.q1, q.q2, 0.0);
    return -std::exp(-2.0 * eval_expr(phi, q.q1, q.q2, 0.0)) * lap;
}

double gaussian_curvature_conformal(const std::string& phi_expr, StatePoint q)
{
    return gaussian_curvature_conformal(*parse_expression(phi_expr), q);
}

FeedbackTransform FeedbackTransform::parse(const std::string& phi1, const std::string& phi2,
                                           const std::string& psi)
{
    FeedbackTransform t;
    t.phi1 = parse_expression(phi1);
    t.phi2 = parse_expression(phi2);
    t.psi = parse_expression(psi);
    t.phi1_src = phi1;
    t.phi2_src = phi2;
    t.psi_src = psi;
    if (depends_on_u(*t.phi1) || depends_on_u(*t.phi2))
        throw Error(Errc::invalid_argument, "phi must be a function of the state only");
    return t;
}

Vec2 FeedbackTransform::apply_state(StatePoint q) const
{
    return {eval_expr(*phi1, q.q1, q.q2, 0.0), eval_expr(*phi2, q.q1, q.q2, 0.0)};
}

double FeedbackTransform::apply_control(StatePoint q, double u) const
{
    return eval_expr(*psi, q.q1, q.q2, u);
}

namespace {

/// Inverts x = phi(z): plain Newton on the primal, then a few Newton steps
/// in full dual arithmetic to converge the derivative parts.
template <class T>
Vec2T<T> invert_phi(const Expr& phi1, const Expr& phi2, const Vec2T<T>& x)
{
    const double x1p = primal_value(x.x), x2p = primal_value(x.y);
    double z1 = x1p, z2 = x2p;
    bool ok = false;
    for (int it = 0; it < 80; ++it) {
        double r1 = eval_expr(phi1, z1, z2, 0.0) - x1p;
        double r2 = eval_expr(phi2, z1, z2, 0.0) - x2p;
        double a = expr_partial<1, 0, 0>(phi1, z1, z2, 0.0);
        double b = expr_partial<0, 1, 0>(phi1, z1, z2, 0.0);
        double c = expr_partial<1, 0, 0>(phi2, z1, z2, 0.0);
        double d = expr_partial<0, 1, 0>(phi2, z1, z2, 0.0);
        double det = a * d - b * c;
        if (det == 0.0) break;
        double s1 = (d * r1 - b * r2) / det;
        double s2 = (a * r2 - c * r1) / det;
        z1 -= s1;
        z2 -= s2;
        if (std::abs(s1) + std::abs(s2) < 1e-14 * (1.0 + std::abs(z1) + std::abs(z2))) {
            ok = true;
            break;
        }
    }
    if (!ok) {
        double r1 = eval_expr(phi1, z1, z2, 0.0) - x1p;
        double r2 = eval_expr(phi2, z1, z2, 0.0) - x2p;
        if (std::abs(r1) + std::abs(r2) > 1e-10 * (1.0 + std::abs(x1p) + std::abs(x2p)))
            throw Error(Errc::inversion_failed, "Newton inversion of phi did not converge");
    }

    if constexpr (std::is_same_v<T, double>) {
        return {z1, z2};
    } else {
        Vec2T<T> z{T(z1), T(z2)};
        const T zero(0.0);
        for (int it = 0; it < 4; ++it) {
            T r1 = eval_expr(phi1, z.x, z.y, zero) - x.x;
            T r2 = eval_expr(phi2, z.x, z.y, zero) - x.y;
            T a = expr_partial<1, 0, 0>(phi1, z.x, z.y, zero);
            T b = expr_partial<0, 1, 0>(phi1, z.x, z.y, zero);
            T c = expr_partial<1, 0, 0>(phi2, z.x, z.y, zero);
            T d = expr_partial<0, 1, 0>(phi2, z.x, z.y, zero);
            T det = a * d - b * c;
            z.x -= (d * r1 - b * r2) / det;
            z.y -= (a * r2 - c * r1) / det;
        }
        return z;
    }
}

/// Inverts utilde = psi(q, u) in u at a fixed (T-valued) state.
template <class T>
T invert_psi(const Expr& psi, const Vec2T<T>& q, const T& utilde)
{
    const double q1p = primal_value(q.x), q2p = primal_value(q.y);
    const double target = primal_value(utilde);
    double u = target;
    bool ok = false;
    for (int it = 0; it < 80; ++it) {
        double r = eval_expr(psi, q1p, q2p, u) - target;
        double du = expr_partial<0, 0, 1>(psi, q1p, q2p, u);
        if (du == 0.0) break;
        double s = r / du;
        u -= s;
        if (std::abs(s) < 1e-14 * (1.0 + std::abs(u))) {
            ok = true;
            break;
        }
    }
    if (!ok) {
        double r = eval_expr(psi, q1p, q2p, u) - target;
        if (std::abs(r) > 1e-10 * (1.0 + std::abs(target)))
            throw Error(Errc::inversion_failed, "Newton inversion of psi did not converge");
    }

    if constexpr (std::is_same_v<T, double>) {
        return u;
    } else {
        T z(u);
        for (int it = 0; it < 4; ++it) {
            T r = eval_expr(psi, q.x, q.y, z) - utilde;
            T du = expr_partial<0, 0, 1>(psi, q.x, q.y, z);
            z -= r / du;
        }
        return z;
    }
}

class TransformedEvaluator final : public SystemEvaluatorBase<TransformedEvaluator> {
  public:
    TransformedEvaluator(std::shared_ptr<const SystemEvaluator> base, FeedbackTransform t)
        : base_(std::move(base)), t_(std::move(t))
    {
    }

    template <class T>
    Vec2T<T> eval_impl(const T& x1, const T& x2, const T& utilde) const
    {
        Vec2T<T> q = invert_phi<T>(*t_.phi1, *t_.phi2, {x1, x2});
        T u = invert_psi<T>(*t_.psi, q, utilde);
        const T zero(0.0);
        T a = expr_partial<1, 0, 0>(*t_.phi1, q.x, q.y, zero);
        T b = expr_partial<0, 1, 0>(*t_.phi1, q.x, q.y, zero);
        T c = expr_partial<1, 0, 0>(*t_.phi2, q.x, q.y, zero);
        T d = expr_partial<0, 1, 0>(*t_.phi2, q.x, q.y, zero);
        Vec2T<T> f = base_->eval(q.x, q.y, u);
        return {a * f.x + b * f.y, c * f.x + d * f.y};
    }

  private:
    std::shared_ptr<const SystemEvaluator> base_;
    FeedbackTransform t_;
};

}  // namespace

SystemModel feedback_transform(const SystemModel& system, const FeedbackTransform& transform)
{
    auto ev = std::make_shared<TransformedEvaluator>(system.evaluator_ptr(), transform);
    return SystemModel(system.name() + "_pushed", system.domain(), ev, Provenance::transformed);
}

FeedbackTransform random_feedback_transform(std::mt19937_64& rng, const Box3& box)
{
    auto unit = [&rng]() { return std::ldexp(static_cast<double>(rng() >> 11), -53); };
    auto coef = [&]() { return 0.2 * unit() - 0.1; };

    auto poly_state = [&](const std::string& var) {
        std::string s = var;
        const char* monoms[] = {"1", "q1", "q2", "q1^2", "q1*q2", "q2^2"};
        for (const char* m : monoms) s += " + (" + fmt_g17(coef()) + ")*" + m;
        return s;
    };
    auto poly_control = [&]() {
        std::string s = "u";
        const char* monoms[] = {"1", "q1", "q2", "u",      "q1^2",
                                "q1*q2", "q1*u", "q2^2", "q2*u", "u^2"};
        for (const char* m : monoms) s += " + (" + fmt_g17(coef()) + ")*" + m;
        return s;
    };

    for (int attempt = 0; attempt < 1000; ++attempt) {
        FeedbackTransform t =
            FeedbackTransform::parse(poly_state("q1"), poly_state("q2"), poly_control());

        // invertibility on the box (with a margin), sampled on a 9x9x9 grid
        bool good = true;
        int det_sign = 0;
        const int n = 9;
        double m1 = 0.1 * (box.q1_max - box.q1_min), m2 = 0.1 * (box.q2_max - box.q2_min);
        double mu = 0.1 * (box.u_max - box.u_min);
        for (int i = 0; i < n && good; ++i)
            for (int j = 0; j < n && good; ++j)
                for (int k = 0; k < n && good; ++k) {
                    double q1 = box.q1_min - m1 + (box.q1_max - box.q1_min + 2 * m1) * i / (n - 1);
                    double q2 = box.q2_min - m2 + (box.q2_max - box.q2_min + 2 * m2) * j / (n - 1);
                    double u = box.u_min - mu + (box.u_max - box.u_min + 2 * mu) * k / (n - 1);
                    double a = expr_partial<1, 0, 0>(*t.phi1, q1, q2, 0.0);
                    double b = expr_partial<0, 1, 0>(*t.phi1, q1, q2, 0.0);
                    double c = expr_partial<1, 0, 0>(*t.phi2, q1, q2, 0.0);
                    double d = expr_partial<0, 1, 0>(*t.phi2, q1, q2, 0.0);
                    double det = a * d - b * c;
                    double psi_u = expr_partial<0, 0, 1>(*t.psi, q1, q2, u);
                    int sign = det > 0 ? 1 : -1;
                    if (det_sign == 0) det_sign = sign;
                    if (std::abs(det) < 0.2 || sign != det_sign || std::abs(psi_u) < 0.2)
                        good = false;
                }
        if (good) return t;
    }
    throw Error(Errc::invalid_argument, "could not sample an invertible feedback transform");
}

}  // namespace curv2d
