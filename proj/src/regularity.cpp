#include "curv2d/regularity.hpp"

#include <algorithm>
#include <cmath>

#include "curv2d/detail/frame.hpp"
#include "json.hpp"

namespace curv2d {

using detail::det2;
using detail::norm2;
using detail::point_data;
using detail::primal2;

double strong_convexity_residual(const SystemModel& system, StatePoint q, double u)
{
    auto pd = point_data<double>(system.evaluator(), q.q1, q.q2, u);
    return pd.det_fu_fuu;
}

double transversality_residual(const SystemModel& system, StatePoint q, double u)
{
    auto pd = point_data<double>(system.evaluator(), q.q1, q.q2, u);
    return pd.det_f_fu;
}

ConvexityData convexity_decomposition(const SystemModel& system, StatePoint q, double u)
{
    auto pd = point_data<double>(system.evaluator(), q.q1, q.q2, u);
    auto dec = detail::decompose(pd, 0);
    return {dec.alpha, dec.beta, dec.eps};
}

RegularityReport regularity_scan(const SystemModel& system, const GridSpec& grid, double tolerance)
{
    if (grid.resolution < 2)
        throw Error(Errc::invalid_argument, "regularity_scan needs resolution >= 2");

    RegularityReport rep;
    rep.grid = grid;
    rep.tolerance = tolerance;

    double sc_min = std::numeric_limits<double>::infinity();
    double tr_min = sc_min, sc_min_scaled = sc_min, tr_min_scaled = sc_min;
    int eps_seen = 0;
    bool eps_mixed = false;

    const int n = grid.resolution;
    auto coord = [n](double lo, double hi, int i) {
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double q1 = coord(grid.q1_min, grid.q1_max, i);
                double q2 = coord(grid.q2_min, grid.q2_max, j);
                double u = coord(grid.u_min, grid.u_max, k);
                auto pd = point_data<double>(system.evaluator(), q1, q2, u);
                double nf = norm2(pd.f), nfu = norm2(pd.fu), nfuu = norm2(pd.fuu);
                double sc = std::abs(pd.det_fu_fuu);
                double tr = std::abs(pd.det_f_fu);
                sc_min = std::min(sc_min, sc);
                tr_min = std::min(tr_min, tr);
                double sc_scale = nfu * nfuu;
                double tr_scale = nf * nfu;
                sc_min_scaled = std::min(sc_min_scaled, sc_scale > 0.0 ? sc / sc_scale : 0.0);
                tr_min_scaled = std::min(tr_min_scaled, tr_scale > 0.0 ? tr / tr_scale : 0.0);
                if (tr > tolerance * tr_scale && sc > tolerance * sc_scale) {
                    auto dec = detail::decompose(pd, 0);
                    if (eps_seen == 0)
                        eps_seen = dec.eps;
                    else if (eps_seen != dec.eps)
                        eps_mixed = true;
                }
            }

    rep.strong_convexity_min = sc_min;
    rep.transversality_min = tr_min;
    rep.strong_convexity_min_scaled = sc_min_scaled;
    rep.transversality_min_scaled = tr_min_scaled;
    rep.strong_convexity_pass = sc_min_scaled > tolerance;
    rep.transversality_pass = tr_min_scaled > tolerance;
    rep.epsilon = eps_mixed ? "mixed" : (eps_seen > 0 ? "+1" : (eps_seen < 0 ? "-1" : "mixed"));
    return rep;
}

std::string RegularityReport::to_json() const
{
    nlohmann::json j;
    j["strong_convexity_min"] = strong_convexity_min;
    j["transversality_min"] = transversality_min;
    j["strong_convexity_min_scaled"] = strong_convexity_min_scaled;
    j["transversality_min_scaled"] = transversality_min_scaled;
    j["epsilon"] = epsilon;
    j["strong_convexity_pass"] = strong_convexity_pass;
    j["transversality_pass"] = transversality_pass;
    j["pass"] = pass();
    j["tolerance"] = tolerance;
    j["grid"] = {{"q1", {grid.q1_min, grid.q1_max}},
                 {"q2", {grid.q2_min, grid.q2_max}},
                 {"u", {grid.u_min, grid.u_max}},
                 {"resolution", grid.resolution}};
    return j.dump(2);
}

namespace {

double locus_residual(const SystemModel& system, StatePoint q, double u)
{
    auto pd = point_data<double>(system.evaluator(), q.q1, q.q2, u);
    return pd.det_f_fu;
}

double locus_residual_du(const SystemModel& system, StatePoint q, double u)
{
    auto pd = point_data<Dual<double>>(system.evaluator(), Dual<double>(q.q1),
                                       Dual<double>(q.q2), Dual<double>{u, 1.0});
    return pd.det_f_fu.d;
}

}  // namespace

AbnormalRoot abnormal_locus_find(const SystemModel& system, StatePoint q, double u_guess)
{
    auto g = [&](double u) { return locus_residual(system, q, u); };

    // expand a bracket around the guess, doubling up to 8 times
    double g0 = g(u_guess);
    double lo = u_guess, hi = u_guess, glo = g0, ghi = g0;
    double h = 0.1;
    bool bracketed = false;
    for (int attempt = 0; attempt < 8 && !bracketed; ++attempt) {
        lo = u_guess - h;
        hi = u_guess + h;
        glo = g(lo);
        ghi = g(hi);
        if (glo == 0.0 || ghi == 0.0 || glo * ghi < 0.0 || glo * g0 < 0.0 || ghi * g0 < 0.0)
            bracketed = true;
        else
            h *= 2.0;
    }
    if (!bracketed) throw Error(Errc::no_root, "no sign change of det(f, f_u) near the guess");

    double a = lo, b = hi, ga = glo, gb = ghi;
    if (ga * gb > 0.0) {
        // the sign change is against the middle sample
        if (glo * g0 < 0.0) {
            b = u_guess;
            gb = g0;
        } else {
            a = u_guess;
            ga = g0;
        }
    }

    // bisection to localize, then Newton polish
    for (int it = 0; it < 60 && (b - a) > 1e-6; ++it) {
        double m = 0.5 * (a + b);
        double gm = g(m);
        if (gm == 0.0) {
            a = b = m;
            break;
        }
        if (ga * gm < 0.0) {
            b = m;
            gb = gm;
        } else {
            a = m;
            ga = gm;
        }
    }
    double u = 0.5 * (a + b);
    for (int it = 0; it < 30; ++it) {
        double val = g(u);
        double der = locus_residual_du(system, q, u);
        if (der == 0.0) break;
        double step = val / der;
        double next = u - step;
        if (next < a - 1.0 || next > b + 1.0) break;
        u = next;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(u))) break;
    }

    double residual = g(u);
    auto pd = point_data<double>(system.evaluator(), q.q1, q.q2, u);
    double scale = norm2(primal2(pd.f)) * norm2(primal2(pd.fu));
    if (std::abs(residual) > 1e-10 * std::max(scale, 1.0))
        throw Error(Errc::no_root, "root polish did not reach tolerance");
    return {u, residual};
}

}  // namespace curv2d
