#include "curv2d/normalform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curv2d/io.hpp"
#include "json.hpp"

namespace curv2d {

using detail::decompose;
using detail::det2;
using detail::flow_endpoint;
using detail::point_data;

namespace {

/// The u-frozen transversal field sigma * (f_u(q,u), 0): its flow from
/// (q0, u0) traces the f_u-direction curve with the control pinned at u0.
class FrozenTransversalField final : public VectorField3Base<FrozenTransversalField> {
  public:
    FrozenTransversalField(std::shared_ptr<const SystemEvaluator> ev, double sigma)
        : ev_(std::move(ev)), sigma_(sigma)
    {
    }

    template <class T>
    Vec3T<T> eval_impl(const Vec3T<T>& p) const
    {
        Dual<T> u{p.u, T(1.0)};
        auto f = ev_->eval(Dual<T>(p.x1, T(0.0)), Dual<T>(p.x2, T(0.0)), u);
        return {T(sigma_) * f.x.d, T(sigma_) * f.y.d, T(0.0)};
    }

  private:
    std::shared_ptr<const SystemEvaluator> ev_;
    double sigma_;
};

class ScaledField final : public VectorField3 {
  public:
    ScaledField(FieldPtr base, double scale) : base_(std::move(base)), scale_(scale) {}
    int max_depth() const override { return base_->max_depth(); }
    Vec3T<double> eval(const Vec3T<double>& p) const override { return impl<double>(p); }
    Vec3T<DualN<1>> eval(const Vec3T<DualN<1>>& p) const override { return impl<DualN<1>>(p); }
    Vec3T<DualN<2>> eval(const Vec3T<DualN<2>>& p) const override { return impl<DualN<2>>(p); }

  private:
    template <class T>
    Vec3T<T> impl(const Vec3T<T>& p) const
    {
        auto v = base_->eval(p);
        return {T(scale_) * v.x1, T(scale_) * v.x2, T(scale_) * v.u};
    }
    FieldPtr base_;
    double scale_;
};

int flow_steps(double span, int steps_per_unit)
{
    double n = std::ceil(std::abs(span) * steps_per_unit);
    return std::max(32, static_cast<int>(n));
}

/// Everything position-dependent the pushed system needs at one chart point.
struct Column {
    double x1 = 0.0, x2 = 0.0;
    StatePoint q;
    double u_vert = 0.0;
    double ainv[2][2] = {};  // inverse of the chart differential
};

Column make_column(double x1, double x2, StatePoint q, double u_vert, const Mat2& J)
{
    double det = J.det();
    double scale = std::hypot(J.m[0][0], J.m[1][0]) * std::hypot(J.m[0][1], J.m[1][1]);
    if (std::abs(det) <= 1e-9 * std::max(scale, 1e-30))
        throw Error(Errc::chart_singular, "chart differential is singular");
    Column c;
    c.x1 = x1;
    c.x2 = x2;
    c.q = q;
    c.u_vert = u_vert;
    c.ainv[0][0] = J.m[1][1] / det;
    c.ainv[0][1] = -J.m[0][1] / det;
    c.ainv[1][0] = -J.m[1][0] / det;
    c.ainv[1][1] = J.m[0][0] / det;
    return c;
}

/// Pre-feedback pushed system (f~1, f~2)(x, u) = Dphi^{-1} f(phi(x), u).
template <class T>
Vec2T<T> pushed_f(const SystemEvaluator& ev, const Column& c, const T& u)
{
    auto f = ev.eval(T(c.q.q1), T(c.q.q2), u);
    return {T(c.ainv[0][0]) * f.x + T(c.ainv[0][1]) * f.y,
            T(c.ainv[1][0]) * f.x + T(c.ainv[1][1]) * f.y};
}

/// Solves f~1(x, u) = utilde for the original control.
template <class T>
T control_from_feedback(const SystemEvaluator& ev, const Column& c, const T& utilde)
{
    double target = primal_value(utilde);
    double u = c.u_vert;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
        Dual<double> ud{u, 1.0};
        auto f = pushed_f(ev, c, ud);
        double r = f.x.v - target;
        if (f.x.d == 0.0) break;
        double step = r / f.x.d;
        u -= step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(u))) {
            ok = true;
            break;
        }
    }
    if (!ok) {
        auto f = pushed_f(ev, c, u);
        if (std::abs(f.x - target) > 1e-10 * (1.0 + std::abs(target)))
            throw Error(Errc::newton_failed, "feedback inversion did not converge");
    }
    if constexpr (std::is_same_v<T, double>) {
        return u;
    } else {
        T z(u);
        for (int it = 0; it < 4; ++it) {
            Dual<T> ud{z, T(1.0)};
            auto f = pushed_f(ev, c, ud);
            z -= (f.x.v - utilde) / f.x.d;
        }
        return z;
    }
}

template <class T>
T pushed_f2(const SystemEvaluator& ev, const Column& c, const T& utilde)
{
    T u = control_from_feedback(ev, c, utilde);
    return pushed_f(ev, c, u).y;
}

double extract_a_column(const SystemEvaluator& ev, int eps, const Column& c, double utilde,
                        double u_switch)
{
    const double e = static_cast<double>(eps);
    auto center_value = [&]() {
        using D2 = DualN<2>;
        D2 ut{DualN<1>{0.0, 1.0}, DualN<1>{1.0, 0.0}};
        D2 f2 = pushed_f2(ev, c, ut);
        double arg = -e * 0.5 * f2.d.d;
        if (!(arg > 0.0))
            throw Error(Errc::non_positive_argument,
                        "a-extraction: -eps f2''(0)/2 is not positive");
        return 0.5 * std::log(arg);
    };
    auto direct_value = [&](double ut) {
        double f2 = pushed_f2(ev, c, ut);
        double arg = e * (1.0 - f2) / (ut * ut);
        if (!(arg > 0.0))
            throw Error(Errc::non_positive_argument,
                        "a-extraction: eps (1 - f2)/u^2 is not positive");
        return 0.5 * std::log(arg);
    };
    double au = std::abs(utilde);
    if (au >= u_switch) return direct_value(utilde);
    if (au < 1e-12) return center_value();
    double t = au / u_switch;
    return (1.0 - t) * center_value() + t * direct_value(utilde);
}

Column column_from_map(const ChartMap& map, double x1, double x2)
{
    ChartNode n = map.node(x1, x2);
    return make_column(x1, x2, n.q, n.u_vert, n.J);
}

}  // namespace

ChartNode ChartMap::node(double x1, double x2) const
{
    return {phi(x1, x2), vertical_control(x1, x2), dphi(x1, x2)};
}

class ChartEngine : public ChartMap {
  public:
    ChartEngine(SystemModel system, StatePoint q0, double u0, ChartOptions opts)
        : system_(std::move(system)), q0_(q0), u0_(u0), opts_(opts)
    {
        auto pd = point_data<double>(system_.evaluator(), q0.q1, q0.q2, u0);
        auto dec = decompose(pd, opts_.eps);
        eps_ = dec.eps;
        opts_.eps = eps_;

        h_field_ = extremal_field(system_, eps_);
        if (opts_.transversal == ChartOptions::Transversal::frozen_control) {
            double orient = det2(pd.fu, pd.f);
            sigma_ = orient > 0 ? 1.0 : -1.0;
            transversal_ = std::make_shared<FrozenTransversalField>(system_.evaluator_ptr(), sigma_);
        } else {
            FieldPtr w = lie_bracket(vertical_field(system_, eps_), h_field_);
            auto wq = w->eval(Vec3{q0.q1, q0.q2, u0});
            double orient = det2(Vec2{wq.x1, wq.x2}, Vec2{pd.f.x, pd.f.y});
            sigma_ = orient > 0 ? 1.0 : -1.0;
            transversal_ = std::make_shared<ScaledField>(std::move(w), sigma_);
        }
    }

    const SystemModel& system() const { return system_; }
    int eps() const { return eps_; }
    double sigma() const { return sigma_; }
    const ChartOptions& options() const { return opts_; }
    StatePoint origin() const { return q0_; }
    double origin_control() const { return u0_; }

    template <class T>
    Vec3T<T> chart_state(const T& x1, const T& x2) const
    {
        Vec3T<T> start{T(q0_.q1), T(q0_.q2), T(u0_)};
        Vec3T<T> on_axis = flow_endpoint(*transversal_, start, x1,
                                         flow_steps(primal_value(x1), opts_.steps_per_unit));
        T u_star = refine_axis_control(on_axis);
        Vec3T<T> lifted{on_axis.x1, on_axis.x2, u_star};
        return flow_endpoint(*h_field_, lifted, x2,
                             flow_steps(primal_value(x2), opts_.steps_per_unit));
    }

    StatePoint phi(double x1, double x2) const override
    {
        auto s = chart_state<double>(x1, x2);
        return {s.x1, s.x2};
    }

    double vertical_control(double x1, double x2) const override
    {
        return chart_state<double>(x1, x2).u;
    }

    Mat2 dphi(double x1, double x2) const override { return node(x1, x2).J; }

    ChartNode node(double x1, double x2) const override
    {
        using D1 = DualN<1>;
        auto s = chart_state<D1>(D1{x1, 1.0}, D1{x2, 0.0});
        ChartNode n;
        n.q = {s.x1.v, s.x2.v};
        n.u_vert = s.u.v;
        n.J.m[0][0] = s.x1.d;
        n.J.m[1][0] = s.x2.d;
        // the x2-column is the vertical velocity at the endpoint
        auto f = system_.evaluator().eval(s.x1.v, s.x2.v, s.u.v);
        n.J.m[0][1] = f.x;
        n.J.m[1][1] = f.y;
        return n;
    }

    StatePoint phi_inverse(StatePoint target) const
    {
        double best = std::numeric_limits<double>::infinity();
        double x1 = 0.0, x2 = 0.0;
        for (const auto& n : grid_) {
            double d = std::hypot(n.q1 - target.q1, n.q2 - target.q2);
            if (d < best) {
                best = d;
                x1 = n.x1;
                x2 = n.x2;
            }
        }
        double box = std::max({std::abs(opts_.x1_max - opts_.x1_min),
                               std::abs(opts_.x2_max - opts_.x2_min), 1e-3});
        const double h = 1e-6 * box;
        auto residual = [&](double a, double b) {
            StatePoint p = phi(a, b);
            return Vec2{p.q1 - target.q1, p.q2 - target.q2};
        };
        Vec2 r = residual(x1, x2);
        double rn = std::hypot(r.x, r.y);
        for (int it = 0; it < 40 && rn > 1e-12 * (1.0 + box); ++it) {
            StatePoint pe = phi(x1 + h, x2), pw = phi(x1 - h, x2);
            StatePoint pn = phi(x1, x2 + h), ps = phi(x1, x2 - h);
            double a = (pe.q1 - pw.q1) / (2 * h), b = (pn.q1 - ps.q1) / (2 * h);
            double c = (pe.q2 - pw.q2) / (2 * h), d = (pn.q2 - ps.q2) / (2 * h);
            double det = a * d - b * c;
            if (det == 0.0) throw Error(Errc::newton_failed, "singular chart jacobian");
            double s1 = (d * r.x - b * r.y) / det;
            double s2 = (a * r.y - c * r.x) / det;
            double damp = 1.0;
            bool moved = false;
            for (int half = 0; half < 12; ++half) {
                Vec2 rt = residual(x1 - damp * s1, x2 - damp * s2);
                double rtn = std::hypot(rt.x, rt.y);
                if (rtn < rn) {
                    x1 -= damp * s1;
                    x2 -= damp * s2;
                    r = rt;
                    rn = rtn;
                    moved = true;
                    break;
                }
                damp /= 2;
            }
            if (!moved) throw Error(Errc::newton_failed, "chart inversion stalled");
        }
        if (rn > 1e-9 * (1.0 + box))
            throw Error(Errc::newton_failed, "chart inversion did not converge");
        return {x1, x2};
    }

    void set_grid(std::vector<ChartGridNode> grid) { grid_ = std::move(grid); }

    Column column(double x1, double x2) const
    {
        ChartNode n = node(x1, x2);
        return make_column(x1, x2, n.q, n.u_vert, n.J);
    }

    const SystemEvaluator& evaluator() const { return system_.evaluator(); }

  private:
    template <class T>
    T refine_axis_control(const Vec3T<T>& on_axis) const
    {
        if (opts_.transversal == ChartOptions::Transversal::frozen_control) return on_axis.u;
        // root of det(f_u(q, .), tangent) = 0 polished from the flow control
        Vec3T<T> w = transversal_->eval(on_axis);
        Vec2T<T> tangent{w.x1, w.x2};
        T u = on_axis.u;
        for (int it = 0; it < 8; ++it) {
            auto pd = point_data(system_.evaluator(), on_axis.x1, on_axis.x2, u);
            T g = det2(pd.fu, tangent);
            T dg = det2(pd.fuu, tangent);
            if (primal_value(dg) == 0.0) break;
            u -= g / dg;
        }
        auto pd = point_data(system_.evaluator(), on_axis.x1, on_axis.x2, u);
        double res = std::abs(primal_value(det2(pd.fu, tangent)));
        double scale =
            detail::norm2(detail::primal2(pd.fu)) * detail::norm2(detail::primal2(tangent));
        if (res > 1e-8 * std::max(scale, 1e-30))
            throw Error(Errc::root_failed, "no annihilating control near the transversal curve");
        return u;
    }

    SystemModel system_;
    StatePoint q0_;
    double u0_;
    ChartOptions opts_;
    int eps_ = +1;
    double sigma_ = 1.0;
    FieldPtr transversal_;
    FieldPtr h_field_;
    std::vector<ChartGridNode> grid_;
};

TransversalCurve transversal_curve(const SystemModel& system, StatePoint q0, double u0, int eps,
                                   double tau_range, int n_samples)
{
    if (n_samples < 1) throw Error(Errc::invalid_argument, "need at least one sample");
    auto pd0 = point_data<double>(system.evaluator(), q0.q1, q0.q2, u0);
    detail::require_transversal(pd0);
    FieldPtr W = lie_bracket(vertical_field(system, eps), extremal_field(system, eps));
    auto w0 = W->eval(Vec3{q0.q1, q0.q2, u0});
    double orient = det2(Vec2{w0.x1, w0.x2}, Vec2{pd0.f.x, pd0.f.y});
    double sigma = orient >= 0 ? 1.0 : -1.0;

    TransversalCurve out;
    out.q0 = q0;
    out.u0 = u0;
    out.epsilon = eps;
    out.sigma = sigma;

    for (int i = 0; i < n_samples; ++i) {
        double tau = n_samples == 1
                         ? 0.0
                         : -tau_range + 2.0 * tau_range * static_cast<double>(i) / (n_samples - 1);
        Vec3 s{q0.q1, q0.q2, u0};
        if (tau != 0.0) {
            auto e = flow_endpoint(*W, Vec3{q0.q1, q0.q2, u0}, sigma * tau, flow_steps(tau, 1500));
            s = {e.x1, e.x2, e.u};
        }
        auto w = W->eval(s);
        TransversalSample sample;
        sample.tau = tau;
        sample.q = {s.x1, s.x2};
        sample.u = s.u;
        sample.tangent = {sigma * w.x1, sigma * w.x2};
        auto f_at = system.evaluator().eval(s.x1, s.x2, u0);
        sample.transversality = det2(sample.tangent, Vec2{f_at.x, f_at.y});
        out.samples.push_back(sample);
    }
    return out;
}

// ---------------------------------------------------------------------------

double extract_chart_a(const SystemModel& system, const ChartMap& map, int eps, double x1,
                       double x2, double u_tilde, double u_switch)
{
    Column c = column_from_map(map, x1, x2);
    return extract_a_column(system.evaluator(), eps, c, u_tilde, u_switch);
}

ChartVerification verify_normal_form(const SystemModel& system, const ChartMap& map, int eps,
                                     const ChartOptions& box)
{
    ChartVerification v;
    const SystemEvaluator& ev = system.evaluator();
    const int n = std::max(2, box.resolution);
    auto lin = [n](double lo, double hi, int i) { return lo + (hi - lo) * i / double(n - 1); };
    try {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double x1 = lin(box.x1_min, box.x1_max, i);
            double x2 = lin(box.x2_min, box.x2_max, j);
            Column c = column_from_map(map, x1, x2);

            {
                double u0 = control_from_feedback(ev, c, 0.0);
                Dual<double> ud{u0, 1.0};
                auto f = pushed_f(ev, c, ud);
                v.max_feedback_residual = std::max(v.max_feedback_residual, std::abs(f.x.v));
                v.max_f2_at_zero = std::max(v.max_f2_at_zero, std::abs(f.y.v - 1.0));
                // dF2/du~ = (df~2/du) / (df~1/du) at u~ = 0
                v.max_df2_du_at_zero = std::max(v.max_df2_du_at_zero, std::abs(f.y.d / f.x.d));
            }

            for (int k = 0; k < n; ++k) {
                double ut = lin(box.u_min, box.u_max, k);
                double u = control_from_feedback(ev, c, ut);
                auto f = pushed_f(ev, c, u);
                v.max_feedback_residual = std::max(v.max_feedback_residual, std::abs(f.x - ut));
                double a = extract_a_column(ev, eps, c, ut, box.u_switch);
                double model = 1.0 - eps * std::exp(2.0 * a) * ut * ut;
                v.max_form_residual = std::max(v.max_form_residual, std::abs(f.y - model));
            }
        }
    } catch (const Error& e) {
        v.note = std::string(errc_name(e.code())) + ": " + e.what();
        v.max_form_residual = std::numeric_limits<double>::infinity();
        v.pass = false;
        return v;
    }
    v.pass = v.max_feedback_residual < 1e-5 && v.max_f2_at_zero < 1e-5 &&
             v.max_df2_du_at_zero < 1e-5 && v.max_form_residual < 1e-5;
    return v;
}

ChartVerification verify_normal_form(const NormalFormChart& chart)
{
    return verify_normal_form(chart.engine().system(), chart.map(), chart.epsilon(),
                              chart.options());
}

std::string ChartVerification::to_json() const
{
    nlohmann::json j;
    j["max_feedback_residual"] = max_feedback_residual;
    j["max_f2_at_zero"] = max_f2_at_zero;
    j["max_df2_du_at_zero"] = max_df2_du_at_zero;
    j["max_form_residual"] = max_form_residual;
    j["pass"] = pass;
    if (!note.empty()) j["note"] = note;
    return j.dump(2);
}

// ---------------------------------------------------------------------------

NormalFormChart::NormalFormChart(std::shared_ptr<const ChartEngine> engine,
                                 std::vector<ChartGridNode> grid, std::vector<ASample> a_values,
                                 ChartVerification verification)
    : engine_(std::move(engine)),
      grid_(std::move(grid)),
      a_values_(std::move(a_values)),
      verification_(verification)
{
}

const ChartMap& NormalFormChart::map() const { return *engine_; }
StatePoint NormalFormChart::phi(double x1, double x2) const { return engine_->phi(x1, x2); }
StatePoint NormalFormChart::phi_inverse(StatePoint q) const { return engine_->phi_inverse(q); }
double NormalFormChart::vertical_control(double x1, double x2) const
{
    return engine_->vertical_control(x1, x2);
}
int NormalFormChart::epsilon() const { return engine_->eps(); }
const ChartOptions& NormalFormChart::options() const { return engine_->options(); }
StatePoint NormalFormChart::origin() const { return engine_->origin(); }
double NormalFormChart::origin_control() const { return engine_->origin_control(); }

double NormalFormChart::feedback(double x1, double x2, double u) const
{
    Column c = engine_->column(x1, x2);
    return pushed_f(engine_->evaluator(), c, u).x;
}

Vec2 NormalFormChart::pushed_system(double x1, double x2, double u_tilde) const
{
    Column c = engine_->column(x1, x2);
    return {u_tilde, pushed_f2(engine_->evaluator(), c, u_tilde)};
}

double NormalFormChart::extract_a(double x1, double x2, double u_tilde) const
{
    Column c = engine_->column(x1, x2);
    return extract_a_column(engine_->evaluator(), engine_->eps(), c, u_tilde,
                            engine_->options().u_switch);
}

std::string NormalFormChart::grid_csv() const
{
    std::string s = "x1,x2,q1,q2\n";
    for (const auto& n : grid_) {
        s += fmt_g17(n.x1);
        s += ',';
        s += fmt_g17(n.x2);
        s += ',';
        s += fmt_g17(n.q1);
        s += ',';
        s += fmt_g17(n.q2);
        s += '\n';
    }
    return s;
}

std::string NormalFormChart::a_samples_csv() const
{
    std::string s = "x1,x2,u,a\n";
    for (const auto& a : a_values_) {
        s += fmt_g17(a.x1);
        s += ',';
        s += fmt_g17(a.x2);
        s += ',';
        s += fmt_g17(a.u);
        s += ',';
        s += fmt_g17(a.a);
        s += '\n';
    }
    return s;
}

std::string NormalFormChart::report_json() const
{
    nlohmann::json j;
    j["q0"] = {origin().q1, origin().q2};
    j["u0"] = origin_control();
    j["epsilon"] = epsilon();
    j["sigma"] = engine_->sigma();
    const auto& o = options();
    j["box"] = {{"x1", {o.x1_min, o.x1_max}},
                {"x2", {o.x2_min, o.x2_max}},
                {"u", {o.u_min, o.u_max}},
                {"resolution", o.resolution}};
    j["transversal"] = o.transversal == ChartOptions::Transversal::frozen_control
                           ? "frozen_control"
                           : "commutator_flow";
    j["verification"] = nlohmann::json::parse(verification_.to_json());
    j["a_origin"] = extract_a(0.0, 0.0, 0.0);
    return j.dump(2);
}

NormalFormChart build_chart(const SystemModel& system, StatePoint q0, double u0,
                            ChartOptions options)
{
    auto engine = std::make_shared<ChartEngine>(system, q0, u0, options);
    const ChartOptions& o = engine->options();
    const int n = std::max(2, o.resolution);
    auto lin = [n](double lo, double hi, int i) { return lo + (hi - lo) * i / double(n - 1); };

    std::vector<ChartGridNode> grid;
    grid.reserve(n * n);
    int det_sign = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double x1 = lin(o.x1_min, o.x1_max, i);
            double x2 = lin(o.x2_min, o.x2_max, j);
            ChartNode nd = engine->node(x1, x2);
            Mat2 J = nd.J;
            double det = J.det();
            double scale = std::hypot(J.m[0][0], J.m[1][0]) * std::hypot(J.m[0][1], J.m[1][1]);
            if (std::abs(det) <= 1e-9 * std::max(scale, 1e-30))
                throw Error(Errc::chart_singular, "chart differential degenerates on the box");
            int sign = det > 0 ? 1 : -1;
            if (det_sign == 0) det_sign = sign;
            if (sign != det_sign)
                throw Error(Errc::chart_singular, "chart differential changes orientation");
            grid.push_back({x1, x2, nd.q.q1, nd.q.q2, nd.u_vert});
        }
    engine->set_grid(grid);

    std::vector<ASample> a_values;
    a_values.reserve(static_cast<size_t>(n) * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double x1 = lin(o.x1_min, o.x1_max, i);
            double x2 = lin(o.x2_min, o.x2_max, j);
            Column c = engine->column(x1, x2);
            for (int k = 0; k < n; ++k) {
                double ut = lin(o.u_min, o.u_max, k);
                a_values.push_back(
                    {x1, x2, ut, extract_a_column(engine->evaluator(), engine->eps(), c, ut, o.u_switch)});
            }
        }

    ChartVerification v = verify_normal_form(system, *engine, engine->eps(), o);
    return NormalFormChart(engine, std::move(grid), std::move(a_values), v);
}

// ---------------------------------------------------------------------------

AbnormalExtension abnormal_extension(const SystemModel& system, StatePoint q,
                                     AbnormalOptions options)
{
    const auto& info = system.builtin_info();
    if (!info || info->family != "abnormal_form")
        throw Error(Errc::wrong_family, "abnormal extension requires an abnormal_form system");
    if (options.points < 2 || options.points > 8)
        throw Error(Errc::invalid_argument, "abnormal extrapolation needs 2..8 points");

    AbnormalExtension out;
    const Expr& a = *info->shape;
    double a1 = expr_partial<1, 0, 0>(a, q.q1, q.q2, 1.0);
    double a11 = expr_partial<2, 0, 0>(a, q.q1, q.q2, 1.0);
    out.series_value = -a11 - a1 * a1;

    std::vector<double> tableau(options.points);
    for (int k = 0; k < options.points; ++k) {
        double u = 1.0 - options.delta * std::pow(2.0, -k);
        tableau[k] = curvature_at(system, q, u).kappa;
    }
    double prev_estimate = tableau.back();
    for (int j = 1; j < options.points; ++j) {
        prev_estimate = tableau.back();
        std::vector<double> next(options.points - j);
        for (int k = 0; k + j < options.points; ++k)
            next[k] = tableau[k + 1] + (tableau[k + 1] - tableau[k]) / (std::pow(2.0, j) - 1.0);
        tableau = std::move(next);
    }
    out.kappa_limit = tableau.front();
    out.extrapolation_residual = std::abs(out.kappa_limit - prev_estimate);
    if (out.extrapolation_residual > options.tolerance * std::max(1.0, std::abs(out.kappa_limit)))
        throw Error(Errc::no_convergence, "abnormal extrapolation did not settle");
    return out;
}

}  // namespace curv2d
