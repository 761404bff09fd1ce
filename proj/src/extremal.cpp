#include "curv2d/extremal.hpp"

#include <cmath>
#include <sstream>

#include "curv2d/io.hpp"

namespace curv2d {

using detail::decompose;
using detail::extended_point_data;
using detail::maximizing_covector_of;
using detail::point_data;

Mat3 VectorField3::jacobian(const Vec3T<double>& p) const
{
    Mat3 J;
    for (int j = 0; j < 3; ++j) {
        Vec3T<Dual<double>> dp{Dual<double>(p.x1), Dual<double>(p.x2), Dual<double>(p.u)};
        if (j == 0) dp.x1.d = 1.0;
        if (j == 1) dp.x2.d = 1.0;
        if (j == 2) dp.u.d = 1.0;
        auto r = eval(dp);
        J.m[0][j] = r.x1.d;
        J.m[1][j] = r.x2.d;
        J.m[2][j] = r.u.d;
    }
    return J;
}

Covector maximizing_covector(const SystemModel& system, StatePoint q, double u, int eps)
{
    auto pd = point_data<double>(system.evaluator(), q.q1, q.q2, u);
    auto lam = maximizing_covector_of(pd, eps);
    return {lam.x, lam.y};
}

FiberFrame fiber_frame(const SystemModel& system, StatePoint q, double u, int eps)
{
    using D1 = Dual<double>;
    auto pd = point_data<D1>(system.evaluator(), D1(q.q1), D1(q.q2), D1{u, 1.0});
    auto dec = decompose(pd, eps);

    FiberFrame out;
    out.epsilon = eps;
    out.alpha = dec.alpha.v;
    out.alpha_u = dec.alpha.d;
    out.beta = dec.beta.v;

    auto lam = maximizing_covector_of(pd, eps);
    out.lambda = {lam.x.v, lam.y.v};

    // lambda_u solves <lambda_u, f> = 0, <lambda_u, f_u> = alpha
    Vec2 f{pd.f.x.v, pd.f.y.v};
    double D = pd.det_f_fu.v;
    out.lambda_u = {-out.alpha * f.y / D, out.alpha * f.x / D};

    out.c0 = -static_cast<double>(eps) * out.alpha;
    out.c1 = out.alpha_u / out.alpha + out.beta;
    out.theta_rate = std::sqrt(out.alpha);
    out.b = (out.alpha_u / (2.0 * out.alpha) + out.beta) / out.theta_rate;
    return out;
}

namespace {

class ExtremalField final : public VectorField3Base<ExtremalField> {
  public:
    ExtremalField(std::shared_ptr<const SystemEvaluator> ev, int eps)
        : ev_(std::move(ev)), eps_(eps)
    {
    }

    template <class T>
    Vec3T<T> eval_impl(const Vec3T<T>& p) const
    {
        auto d = extended_point_data(*ev_, p.x1, p.x2, p.u);
        auto lam = maximizing_covector_of(d, eps_);
        // matrix-vector products (df/dq) f_u and (df_u/dq) f
        Vec2T<T> fq_fu{d.fq1.x * d.fu.x + d.fq2.x * d.fu.y, d.fq1.y * d.fu.x + d.fq2.y * d.fu.y};
        Vec2T<T> fuq_f{d.fuq1.x * d.f.x + d.fuq2.x * d.f.y, d.fuq1.y * d.f.x + d.fuq2.y * d.f.y};
        T num = lam.x * fq_fu.x + lam.y * fq_fu.y - (lam.x * fuq_f.x + lam.y * fuq_f.y);
        T den = lam.x * d.fuu.x + lam.y * d.fuu.y;  // = -alpha, nonzero under the assumptions
        return {d.f.x, d.f.y, num / den};
    }

  private:
    std::shared_ptr<const SystemEvaluator> ev_;
    int eps_;
};

class VerticalField final : public VectorField3Base<VerticalField> {
  public:
    VerticalField(std::shared_ptr<const SystemEvaluator> ev, int eps)
        : ev_(std::move(ev)), eps_(eps)
    {
    }

    template <class T>
    Vec3T<T> eval_impl(const Vec3T<T>& p) const
    {
        auto d = point_data(*ev_, p.x1, p.x2, p.u);
        auto dec = decompose(d, eps_);
        return {T(0.0), T(0.0), T(1.0) / sqrt(dec.alpha)};
    }

  private:
    std::shared_ptr<const SystemEvaluator> ev_;
    int eps_;
};

}  // namespace

FieldPtr extremal_field(const SystemModel& system, int eps)
{
    return std::make_shared<ExtremalField>(system.evaluator_ptr(), eps);
}

FieldPtr vertical_field(const SystemModel& system, int eps)
{
    return std::make_shared<VerticalField>(system.evaluator_ptr(), eps);
}

namespace {

Vec3 rk4_step(const VectorField3& f, const Vec3& p, double h)
{
    auto advance = [](const Vec3& base, const Vec3& k, double s) {
        return Vec3{base.x1 + s * k.x1, base.x2 + s * k.x2, base.u + s * k.u};
    };
    Vec3 k1 = f.eval(p);
    Vec3 k2 = f.eval(advance(p, k1, h / 2));
    Vec3 k3 = f.eval(advance(p, k2, h / 2));
    Vec3 k4 = f.eval(advance(p, k3, h));
    return Vec3{p.x1 + h / 6 * (k1.x1 + 2 * (k2.x1 + k3.x1) + k4.x1),
                p.x2 + h / 6 * (k1.x2 + 2 * (k2.x2 + k3.x2) + k4.x2),
                p.u + h / 6 * (k1.u + 2 * (k2.u + k3.u) + k4.u)};
}

double step_error(const Vec3& a, const Vec3& b)
{
    return std::max({std::abs(a.x1 - b.x1), std::abs(a.x2 - b.x2), std::abs(a.u - b.u)});
}

}  // namespace

std::vector<TrajectoryPoint> integrate_flow(const VectorField3& field, Vec3 start, double t_final,
                                            FlowOptions options)
{
    std::vector<TrajectoryPoint> out;
    out.push_back({0.0, start.x1, start.x2, start.u});
    if (t_final == 0.0) return out;

    try {
        if (!options.adaptive) {
            int steps = options.steps > 0 ? options.steps : 1000;
            double h = t_final / steps;
            Vec3 p = start;
            for (int s = 1; s <= steps; ++s) {
                p = rk4_step(field, p, h);
                out.push_back({t_final * s / steps, p.x1, p.x2, p.u});
            }
            return out;
        }

        // adaptive: compare a full step against two half steps, halve until
        // the local error clears the bound
        double t = 0.0;
        double h = t_final / (options.steps > 0 ? options.steps : 64);
        const double dir = t_final > 0 ? 1.0 : -1.0;
        Vec3 p = start;
        const double h_min = std::abs(t_final) * 1e-12;
        while (dir * (t_final - t) > 0.0) {
            if (dir * (t + h - t_final) > 0.0) h = t_final - t;
            Vec3 full = rk4_step(field, p, h);
            Vec3 half = rk4_step(field, rk4_step(field, p, h / 2), h / 2);
            double err = step_error(full, half);
            if (err > options.local_error) {
                if (std::abs(h) <= h_min)
                    throw Error(Errc::step_underflow, "adaptive step fell below the minimum size");
                h /= 2;
                continue;
            }
            p = half;
            t += h;
            out.push_back({t, p.x1, p.x2, p.u});
            if (err < options.local_error / 64 && dir * (t + 2 * h - t_final) <= 0.0) h *= 2;
        }
        return out;
    } catch (const Error& e) {
        if (e.code() == Errc::step_underflow || e.code() == Errc::invalid_argument) throw;
        throw Error(Errc::evaluation_failed,
                    std::string("field evaluation failed along the trajectory: ") + e.what());
    }
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& trajectory)
{
    std::string s = "t,q1,q2,u\n";
    for (const auto& p : trajectory) {
        s += fmt_g17(p.t);
        s += ',';
        s += fmt_g17(p.q1);
        s += ',';
        s += fmt_g17(p.q2);
        s += ',';
        s += fmt_g17(p.u);
        s += '\n';
    }
    return s;
}

}  // namespace curv2d
