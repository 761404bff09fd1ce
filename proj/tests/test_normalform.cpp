#include <cmath>

#include "curv2d/normalform.hpp"
#include "curv2d/regularity.hpp"
#include "doctest.h"

using namespace curv2d;

namespace {

SystemModel unicycle() { return builtin_system("conformal_frame", {{"phi", "0"}}); }
SystemModel hyperbolic() { return builtin_system("conformal_frame", {{"phi", "-log(q2)"}}); }

constexpr double kHalfPi = 1.5707963267948966;

}  // namespace

TEST_SUITE("normalform")
{
    TEST_CASE("transversal curve of the flat frame")
    {
        SystemModel flat = unicycle();
        auto curve = transversal_curve(flat, {0, 0}, 0.0, +1, 0.3, 7);
        // [v,h] = (-sin u, cos u, 0); orientation makes N0 run along -q2
        for (const auto& s : curve.samples) {
            CHECK(s.q.q1 == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(s.q.q2 == doctest::Approx(-s.tau).epsilon(1e-12));
            CHECK(s.u == doctest::Approx(0.0));
            CHECK(std::abs(s.transversality) == doctest::Approx(1.0).epsilon(1e-10));
        }

        auto single = transversal_curve(flat, {0.2, 0.4}, 0.0, +1, 0.0, 1);
        REQUIRE(single.samples.size() == 1);
        CHECK(single.samples[0].q.q1 == 0.2);
        CHECK(single.samples[0].q.q2 == 0.4);
    }

    TEST_CASE("chart on normal_form(a=0) is the identity")
    {
        SystemModel nf = builtin_system("normal_form", {{"a", "0"}});
        ChartOptions opts;
        opts.resolution = 5;
        auto chart = build_chart(nf, {0, 0}, 0.0, opts);
        CHECK(chart.epsilon() == +1);
        for (double x1 : {-0.2, 0.0, 0.15})
            for (double x2 : {-0.2, 0.1}) {
                StatePoint p = chart.phi(x1, x2);
                CHECK(p.q1 == doctest::Approx(x1).epsilon(1e-9));
                CHECK(p.q2 == doctest::Approx(x2).epsilon(1e-9));
                CHECK(chart.vertical_control(x1, x2) == doctest::Approx(0.0));
            }
        // pushed system reproduces f
        for (double ut : {-0.3, 0.0, 0.25}) {
            Vec2 f = chart.pushed_system(0.1, -0.05, ut);
            CHECK(f.x == doctest::Approx(ut).epsilon(1e-10));
            CHECK(f.y == doctest::Approx(1.0 - ut * ut).epsilon(1e-9));
        }
        CHECK(chart.verification().pass);
        CHECK(chart.verification().max_form_residual < 1e-8);
    }

    TEST_CASE("round trip on normal_form(a=q2): identity chart and a = x2")
    {
        SystemModel nf = builtin_system("normal_form", {{"a", "q2"}});
        ChartOptions opts;
        opts.resolution = 5;
        opts.x1_min = -0.2;
        opts.x1_max = 0.2;
        opts.x2_min = -0.2;
        opts.x2_max = 0.2;
        auto chart = build_chart(nf, {0, 0}, 0.0, opts);
        for (double x1 : {-0.2, 0.0, 0.13})
            for (double x2 : {-0.17, 0.0, 0.2}) {
                StatePoint p = chart.phi(x1, x2);
                CHECK(p.q1 == doctest::Approx(x1).epsilon(1e-5));
                CHECK(p.q2 == doctest::Approx(x2).epsilon(1e-5));
            }
        for (const auto& s : chart.a_values())
            CHECK(s.a == doctest::Approx(s.x2).epsilon(1e-5));
        CHECK(chart.verification().pass);
        CHECK(chart.verification().max_feedback_residual < 1e-8);
        CHECK(chart.verification().max_f2_at_zero < 1e-8);
        CHECK(chart.verification().max_df2_du_at_zero < 1e-8);
        CHECK(chart.verification().max_form_residual < 1e-8);
    }

    TEST_CASE("flat-frame chart at u0 = pi/2 recovers a = -ln(2)/2")
    {
        SystemModel flat = unicycle();
        ChartOptions opts;
        opts.resolution = 5;
        auto chart = build_chart(flat, {0, 0}, kHalfPi, opts);
        CHECK(chart.verification().pass);
        CHECK(chart.verification().max_f2_at_zero < 1e-6);

        // f~2(x, u~) = sqrt(1 - u~^2)
        for (double ut : {-0.3, 0.1, 0.35}) {
            Vec2 f = chart.pushed_system(0.05, -0.1, ut);
            CHECK(f.y == doctest::Approx(std::sqrt(1.0 - ut * ut)).epsilon(1e-8));
        }
        CHECK(chart.extract_a(0, 0, 0) == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-6));

        // e^{2a} u~^2 = 1 - sqrt(1 - u~^2) away from zero as well
        double ut = 0.3;
        double expected_a = 0.5 * std::log((1.0 - std::sqrt(1.0 - ut * ut)) / (ut * ut));
        CHECK(chart.extract_a(0.1, 0.1, ut) == doctest::Approx(expected_a).epsilon(1e-7));
    }

    TEST_CASE("concave family detects eps = -1 and extracts a = 0")
    {
        SystemModel nf = builtin_system("normal_form", {{"a", "0"}, {"eps", "-1"}});
        ChartOptions opts;
        opts.resolution = 5;
        auto chart = build_chart(nf, {0, 0}, 0.0, opts);
        CHECK(chart.epsilon() == -1);
        for (double ut : {-0.2, 0.0, 0.3})
            CHECK(chart.extract_a(0.05, -0.05, ut) == doctest::Approx(0.0).epsilon(1e-8));
        CHECK(chart.verification().pass);
    }

    TEST_CASE("hyperbolic chart passes and transports curvature")
    {
        SystemModel hyp = hyperbolic();
        ChartOptions opts;
        opts.resolution = 5;
        opts.x1_min = -0.15;
        opts.x1_max = 0.15;
        opts.x2_min = -0.15;
        opts.x2_max = 0.15;
        opts.u_min = -0.3;
        opts.u_max = 0.3;
        auto chart = build_chart(hyp, {0.0, 1.0}, kHalfPi, opts);
        CHECK(chart.verification().pass);

        // kappa from the extracted a at the origin:
        // -d2a/dx2^2(0, 0) - (da/dx2(0, 0))^2 = -1
        const double h = 1e-2;
        auto a_at = [&](double x2) { return chart.extract_a(0.0, x2, 0.0); };
        double a0 = a_at(0.0), ap = a_at(h), am = a_at(-h);
        double a2 = (ap - am) / (2 * h);
        double a22 = (ap - 2 * a0 + am) / (h * h);
        CHECK(-a22 - a2 * a2 == doctest::Approx(-1.0).epsilon(1e-3));
    }

    TEST_CASE("chart inversion is consistent")
    {
        SystemModel hyp = hyperbolic();
        ChartOptions opts;
        opts.resolution = 5;
        opts.x1_min = -0.15;
        opts.x1_max = 0.15;
        opts.x2_min = -0.15;
        opts.x2_max = 0.15;
        auto chart = build_chart(hyp, {0.0, 1.0}, kHalfPi, opts);
        for (double x1 : {-0.1, 0.0, 0.12})
            for (double x2 : {-0.12, 0.05}) {
                StatePoint q = chart.phi(x1, x2);
                StatePoint x = chart.phi_inverse(q);
                CHECK(x.q1 == doctest::Approx(x1).epsilon(1e-9));
                CHECK(x.q2 == doctest::Approx(x2).epsilon(1e-9));
            }
    }

    TEST_CASE("commutator-flow transversal also yields a valid normal form")
    {
        SystemModel hyp = hyperbolic();
        ChartOptions opts;
        opts.resolution = 4;
        opts.transversal = ChartOptions::Transversal::commutator_flow;
        opts.x1_min = -0.1;
        opts.x1_max = 0.1;
        opts.x2_min = -0.1;
        opts.x2_max = 0.1;
        opts.u_min = -0.25;
        opts.u_max = 0.25;
        auto chart = build_chart(hyp, {0.0, 1.0}, kHalfPi, opts);
        CHECK(chart.verification().pass);
    }

    TEST_CASE("corrupted chart map fails verification")
    {
        SystemModel hyp = hyperbolic();
        ChartOptions opts;
        opts.resolution = 4;
        opts.x1_min = -0.1;
        opts.x1_max = 0.1;
        opts.x2_min = -0.1;
        opts.x2_max = 0.1;
        auto chart = build_chart(hyp, {0.0, 1.0}, kHalfPi, opts);
        REQUIRE(chart.verification().pass);

        struct Perturbed : ChartMap {
            const ChartMap* base;
            StatePoint phi(double x1, double x2) const override
            {
                StatePoint p = base->phi(x1, x2);
                return {p.q1, p.q2 + 0.01};
            }
            Mat2 dphi(double x1, double x2) const override { return base->dphi(x1, x2); }
            double vertical_control(double x1, double x2) const override
            {
                return base->vertical_control(x1, x2);
            }
        } bad;
        bad.base = &chart.map();
        auto v = verify_normal_form(hyp, bad, chart.epsilon(), chart.options());
        CHECK_FALSE(v.pass);
    }

    TEST_CASE("curvature transport through the chart")
    {
        // kappa of the original system at (phi(x), u_vert(x)) equals the
        // series value from the extracted a at (x, 0)
        SystemModel hyp = hyperbolic();
        ChartOptions opts;
        opts.resolution = 4;
        opts.x1_min = -0.1;
        opts.x1_max = 0.1;
        opts.x2_min = -0.1;
        opts.x2_max = 0.1;
        auto chart = build_chart(hyp, {0.0, 1.0}, kHalfPi, opts);
        const double h = 1e-2;
        for (double x1 : {-0.05, 0.05})
            for (double x2 : {-0.05, 0.08}) {
                StatePoint q = chart.phi(x1, x2);
                double uv = chart.vertical_control(x1, x2);
                double k = curvature_at(hyp, q, uv).kappa;
                double a0 = chart.extract_a(x1, x2, 0.0);
                double ap = chart.extract_a(x1, x2 + h, 0.0);
                double am = chart.extract_a(x1, x2 - h, 0.0);
                double series = -(ap - 2 * a0 + am) / (h * h) - std::pow((ap - am) / (2 * h), 2);
                CHECK(k == doctest::Approx(series).epsilon(1e-4));
            }
    }

    TEST_CASE("chart rejects a box that leaves the regular region")
    {
        // the flat-frame feedback is u~ = cos(u), so |u~| >= 1 is unreachable
        // and the feedback inversion must fail
        SystemModel flat = unicycle();
        ChartOptions opts;
        opts.resolution = 4;
        opts.u_min = -1.2;
        opts.u_max = 1.2;
        CHECK_THROWS_AS((void)build_chart(flat, {0, 0}, kHalfPi, opts), Error);
    }

    TEST_CASE("abnormal extension on reference families")
    {
        SystemModel flatab = builtin_system("abnormal_form", {{"a", "0"}});
        auto r0 = abnormal_extension(flatab, {0.3, 0.1});
        CHECK(r0.series_value == 0.0);
        CHECK(std::abs(r0.kappa_limit) < 1e-6);

        SystemModel lin = builtin_system("abnormal_form", {{"a", "0.2*q1"}});
        for (double q1 : {-0.5, 0.0, 0.7}) {
            auto r = abnormal_extension(lin, {q1, 0.4});
            CHECK(r.series_value == doctest::Approx(-0.04));
            CHECK(r.kappa_limit == doctest::Approx(-0.04).epsilon(1e-4));
        }

        SystemModel sq = builtin_system("abnormal_form", {{"a", "q1^2/2"}});
        auto r = abnormal_extension(sq, {0.0, 0.2});
        CHECK(r.series_value == doctest::Approx(-1.0));
        CHECK(r.kappa_limit == doctest::Approx(-1.0).epsilon(1e-4));

        CHECK_THROWS_AS((void)abnormal_extension(unicycle(), {0, 0}), Error);
    }

    TEST_CASE("chart artifacts serialize")
    {
        SystemModel nf = builtin_system("normal_form", {{"a", "0"}});
        ChartOptions opts;
        opts.resolution = 3;
        auto chart = build_chart(nf, {0, 0}, 0.0, opts);
        CHECK(chart.grid_csv().substr(0, 12) == "x1,x2,q1,q2\n");
        CHECK(chart.a_samples_csv().substr(0, 10) == "x1,x2,u,a\n");
        CHECK(chart.report_json().find("\"pass\"") != std::string::npos);
        CHECK(chart.grid().size() == 9);
        CHECK(chart.a_values().size() == 27);
    }
}
