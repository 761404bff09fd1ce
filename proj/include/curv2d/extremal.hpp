#pragma once

#include <memory>
#include <vector>

#include "curv2d/detail/frame.hpp"
#include "curv2d/system.hpp"

namespace curv2d {

struct Covector {
    double p1 = 0.0;
    double p2 = 0.0;
};

/// The fiber curve data at one point of the level set: the maximizing
/// covector, its u-derivative, the expansion lambda_uu = c0 lambda + c1
/// lambda_u, the natural-parameter rate theta' = sqrt(alpha) and the
/// coefficient b of the second-order fiber relation.
struct FiberFrame {
    Covector lambda;
    Covector lambda_u;
    double c0 = 0.0;
    double c1 = 0.0;
    double theta_rate = 0.0;
    double b = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double alpha_u = 0.0;
    int epsilon = +1;
};

template <class T>
struct Vec3T {
    T x1{}, x2{}, u{};
};
using Vec3 = Vec3T<double>;

struct Mat3 {
    double m[3][3] = {};
};

/// A vector field on (q1,q2,u)-space, evaluable on nested duals so that
/// Lie brackets and flow sensitivities stay exact. max_depth says how many
/// dual levels the field supports (brackets lose one level per nesting).
class VectorField3 {
  public:
    virtual ~VectorField3() = default;
    virtual int max_depth() const = 0;
    virtual Vec3T<double> eval(const Vec3T<double>& p) const = 0;
    virtual Vec3T<DualN<1>> eval(const Vec3T<DualN<1>>& p) const = 0;
    virtual Vec3T<DualN<2>> eval(const Vec3T<DualN<2>>& p) const = 0;

    /// First derivatives of all components, via one dual level.
    Mat3 jacobian(const Vec3T<double>& p) const;
};

using FieldPtr = std::shared_ptr<const VectorField3>;

namespace detail {

template <class T>
Vec3T<T> field_eval(const VectorField3& f, const Vec3T<T>& p)
{
    return f.eval(p);
}

[[noreturn]] inline void depth_unavailable()
{
    throw Error(Errc::derivative_unavailable,
                "field does not provide derivatives at the requested depth");
}

}  // namespace detail

template <class Derived>
class VectorField3Base : public VectorField3 {
  public:
    int max_depth() const override { return 2; }
    Vec3T<double> eval(const Vec3T<double>& p) const override
    {
        return self().template eval_impl<double>(p);
    }
    Vec3T<DualN<1>> eval(const Vec3T<DualN<1>>& p) const override
    {
        return self().template eval_impl<DualN<1>>(p);
    }
    Vec3T<DualN<2>> eval(const Vec3T<DualN<2>>& p) const override
    {
        return self().template eval_impl<DualN<2>>(p);
    }

  private:
    const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Wraps a functor templated on the scalar type as a field (used for test
/// fields and small internal helpers).
template <class F>
class FunctorField final : public VectorField3Base<FunctorField<F>> {
  public:
    explicit FunctorField(F f) : f_(std::move(f)) {}
    template <class T>
    Vec3T<T> eval_impl(const Vec3T<T>& p) const
    {
        return f_(p);
    }

  private:
    F f_;
};

template <class F>
FieldPtr make_field(F f)
{
    return std::make_shared<FunctorField<F>>(std::move(f));
}

/// lambda(q,u) solving <lambda, f> = eps, <lambda, f_u> = 0.
Covector maximizing_covector(const SystemModel& system, StatePoint q, double u, int eps);

/// Full fiber-frame data; closed forms c0 = -eps*alpha, c1 = alpha_u/alpha
/// + beta, theta' = sqrt(alpha), b = (alpha_u/(2 alpha) + beta)/sqrt(alpha).
FiberFrame fiber_frame(const SystemModel& system, StatePoint q, double u, int eps);

/// The reduced extremal field h on (q,u)-space: (f1, f2, udot) with
/// udot = [<lam,(df/dq) f_u> - <lam,(df_u/dq) f>] / <lam, f_uu>.
FieldPtr extremal_field(const SystemModel& system, int eps);

/// The vertical field v = (0, 0, alpha^{-1/2}).
FieldPtr vertical_field(const SystemModel& system, int eps);

struct TrajectoryPoint {
    double t = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double u = 0.0;
};

struct FlowOptions {
    int steps = 0;          // 0: default ceil(|t|/...) with 1000 steps per t_final
    bool adaptive = false;  // step-halving control on the local error
    double local_error = 1e-10;
};

/// Explicit RK4 trajectory of a field. Throws Error(evaluation_failed) when
/// the field cannot be evaluated along the path and Error(step_underflow)
/// when adaptive refinement stalls.
std::vector<TrajectoryPoint> integrate_flow(const VectorField3& field, Vec3 start, double t_final,
                                            FlowOptions options = {});

std::string trajectory_csv(const std::vector<TrajectoryPoint>& trajectory);

namespace detail {

/// Fixed-step RK4 endpoint, generic over dual depth (start point and total
/// time may carry dual parts; the step count is taken from the primal).
template <class T>
Vec3T<T> flow_endpoint(const VectorField3& field, Vec3T<T> p, const T& t_total, int steps)
{
    if (steps <= 0) throw Error(Errc::invalid_argument, "flow steps must be positive");
    const T h = t_total / T(static_cast<double>(steps));
    const T half = h / T(2.0);
    const T sixth = h / T(6.0);
    for (int s = 0; s < steps; ++s) {
        Vec3T<T> k1 = field_eval(field, p);
        Vec3T<T> p2{p.x1 + half * k1.x1, p.x2 + half * k1.x2, p.u + half * k1.u};
        Vec3T<T> k2 = field_eval(field, p2);
        Vec3T<T> p3{p.x1 + half * k2.x1, p.x2 + half * k2.x2, p.u + half * k2.u};
        Vec3T<T> k3 = field_eval(field, p3);
        Vec3T<T> p4{p.x1 + h * k3.x1, p.x2 + h * k3.x2, p.u + h * k3.u};
        Vec3T<T> k4 = field_eval(field, p4);
        p.x1 += sixth * (k1.x1 + T(2.0) * (k2.x1 + k3.x1) + k4.x1);
        p.x2 += sixth * (k1.x2 + T(2.0) * (k2.x2 + k3.x2) + k4.x2);
        p.u += sixth * (k1.u + T(2.0) * (k2.u + k3.u) + k4.u);
    }
    return p;
}

}  // namespace detail

}  // namespace curv2d
