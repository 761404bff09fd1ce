#include <cmath>

#include "curv2d/regularity.hpp"
#include "doctest.h"

using namespace curv2d;

namespace {
SystemModel unicycle() { return builtin_system("conformal_frame", {{"phi", "0"}}); }
SystemModel hyperbolic() { return builtin_system("conformal_frame", {{"phi", "-log(q2)"}}); }
SystemModel affine()
{
    return parse_system(R"##({"f1": "1", "f2": "u",
        "control_domain": {"kind": "interval", "min": -1, "max": 1}})##");
}
}  // namespace

TEST_SUITE("regularity")
{
    TEST_CASE("strong convexity residual")
    {
        CHECK(strong_convexity_residual(unicycle(), {0.2, -0.8}, 1.1) == doctest::Approx(1.0));
        SystemModel nf = builtin_system("normal_form", {{"a", "0"}});
        CHECK(strong_convexity_residual(nf, {0, 0}, 0.0) == doctest::Approx(-2.0));
        CHECK(strong_convexity_residual(affine(), {0, 0}, 0.3) == doctest::Approx(0.0));
    }

    TEST_CASE("transversality residual")
    {
        CHECK(transversality_residual(unicycle(), {0.5, 0.5}, 2.0) == doctest::Approx(1.0));
        SystemModel ab = builtin_system("abnormal_form", {{"a", "0"}});
        CHECK(transversality_residual(ab, {0.3, 0.9}, 1.0) == doctest::Approx(0.0));
        SystemModel nf = builtin_system("normal_form", {{"a", "0"}});
        CHECK(transversality_residual(nf, {0, 0}, 0.0) == doctest::Approx(-1.0));
    }

    TEST_CASE("convexity decomposition on the flat frame")
    {
        auto c = convexity_decomposition(unicycle(), {1.0, 2.0}, 0.7);
        CHECK(c.alpha == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(c.beta == doctest::Approx(0.0));
        CHECK(c.epsilon == +1);

        // conformal scaling cancels: alpha = 1, beta = 0 at any point
        auto h = convexity_decomposition(hyperbolic(), {0.0, 2.0}, 0.4);
        CHECK(h.alpha == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(h.beta == doctest::Approx(0.0));
        CHECK(h.epsilon == +1);
    }

    TEST_CASE("convexity decomposition on the normal form")
    {
        SystemModel nf = builtin_system("normal_form", {{"a", "0"}});
        auto c = convexity_decomposition(nf, {0.4, -0.2}, 0.0);
        CHECK(c.alpha == doctest::Approx(2.0));
        CHECK(c.beta == doctest::Approx(0.0));
        CHECK(c.epsilon == +1);

        SystemModel concave = parse_system(R"##({"f1": "u", "f2": "1 + u^2",
            "control_domain": {"kind": "interval", "min": -1, "max": 1}})##");
        auto k = convexity_decomposition(concave, {0, 0}, 0.0);
        CHECK(k.epsilon == -1);
        CHECK(k.alpha == doctest::Approx(2.0));
    }

    TEST_CASE("decomposition reconstruction residual")
    {
        // || f_uu + eps alpha f + beta f_u || <= 1e-10 ||f_uu|| at sampled points
        SystemModel sys[] = {unicycle(), hyperbolic(),
                             builtin_system("normal_form", {{"a", "0.3*q2 + 0.1*q1*q2 + 0.2*q2^2"}}),
                             builtin_system("zermelo", {{"phi", "0.1*q1"}, {"drift1", "0.2"}, {"drift2", "-0.1"}})};
        for (const auto& m : sys) {
            for (double u : {-0.4, 0.0, 0.35}) {
                StatePoint q{0.25, 1.4};
                auto c = convexity_decomposition(m, q, u);
                Jet j = m.jet(q, u, 2);
                double r1 = j.partial(0, 0, 0, 2) + c.epsilon * c.alpha * j.partial(0, 0, 0, 0) +
                            c.beta * j.partial(0, 0, 0, 1);
                double r2 = j.partial(1, 0, 0, 2) + c.epsilon * c.alpha * j.partial(1, 0, 0, 0) +
                            c.beta * j.partial(1, 0, 0, 1);
                double scale = std::hypot(j.partial(0, 0, 0, 2), j.partial(1, 0, 0, 2));
                CHECK(std::hypot(r1, r2) <= 1e-10 * scale);
            }
        }
    }

    TEST_CASE("decomposition errors")
    {
        CHECK_THROWS_AS((void)convexity_decomposition(affine(), {0, 0}, 0.0), Error);
        SystemModel ab = builtin_system("abnormal_form", {{"a", "0"}});
        // on the abnormal locus the basis {f, f_u} degenerates
        try {
            (void)convexity_decomposition(ab, {0, 0}, 1.0);
            FAIL("expected SingularBasis");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::singular_basis);
        }
    }

    TEST_CASE("regularity scan on the flat frame")
    {
        GridSpec g;
        g.q1_min = -1;
        g.q1_max = 1;
        g.q2_min = -1;
        g.q2_max = 1;
        g.u_min = 0;
        g.u_max = 6.283185307179586;
        g.resolution = 5;
        auto rep = regularity_scan(unicycle(), g);
        CHECK(rep.strong_convexity_min == doctest::Approx(1.0));
        CHECK(rep.transversality_min == doctest::Approx(1.0));
        CHECK(rep.epsilon == "+1");
        CHECK(rep.pass());
        CHECK(rep.to_json().find("strong_convexity_min") != std::string::npos);
    }

    TEST_CASE("scan flags the abnormal family on transversality only")
    {
        SystemModel ab = builtin_system("abnormal_form", {{"a", "0"}});
        GridSpec g;
        g.q1_min = -0.5;
        g.q1_max = 0.5;
        g.q2_min = -0.5;
        g.q2_max = 0.5;
        g.u_min = 0.5;
        g.u_max = 1.5;  // contains the abnormal control u = 1
        g.resolution = 5;
        auto rep = regularity_scan(ab, g);
        CHECK(rep.transversality_pass == false);
        CHECK(rep.strong_convexity_pass == true);
        // hand determinant: det(f, f_u) = (1-u)(-1-u) vanishes at u = 1
        CHECK(rep.transversality_min == doctest::Approx(0.0).epsilon(1e-12));
    }

    TEST_CASE("scan fails strong convexity for a control-affine system")
    {
        GridSpec g;
        g.u_min = -0.5;
        g.u_max = 0.5;
        auto rep = regularity_scan(affine(), g);
        CHECK(rep.strong_convexity_pass == false);
    }

    TEST_CASE("epsilon is locally constant along regular grid paths")
    {
        SystemModel nf = builtin_system("normal_form", {{"a", "0.2*q2"}});
        int last = 0;
        for (int i = 0; i <= 20; ++i) {
            double u = -0.6 + 1.2 * i / 20.0;
            auto c = convexity_decomposition(nf, {0.0, 0.1}, u);
            if (last != 0) CHECK(c.epsilon == last);
            last = c.epsilon;
        }
    }

    TEST_CASE("abnormal locus root finding")
    {
        SystemModel ab = builtin_system("abnormal_form", {{"a", "0"}});
        auto r = abnormal_locus_find(ab, {0.7, -0.3}, 0.8);
        CHECK(r.u_ab == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(r.residual) < 1e-10);

        // the conformal factor scales but never shifts the root
        SystemModel ab2 = builtin_system("abnormal_form", {{"a", "0.2*q1"}});
        auto r2 = abnormal_locus_find(ab2, {1.3, 0.0}, 0.8);
        CHECK(r2.u_ab == doctest::Approx(1.0).epsilon(1e-10));

        // other branch: det = (1-u)(-1-u) also vanishes at u = -1
        auto r3 = abnormal_locus_find(ab, {0.0, 0.0}, -0.8);
        CHECK(r3.u_ab == doctest::Approx(-1.0).epsilon(1e-10));

        CHECK_THROWS_AS((void)abnormal_locus_find(unicycle(), {0, 0}, 0.5), Error);
    }

    TEST_CASE("abnormal samples keep strong convexity")
    {
        SystemModel ab = builtin_system("abnormal_form", {{"a", "0.2*q1"}});
        for (double q1 : {-0.5, 0.0, 0.5}) {
            auto r = abnormal_locus_find(ab, {q1, 0.2}, 0.8);
            double sc = strong_convexity_residual(ab, {q1, 0.2}, r.u_ab);
            double tr = transversality_residual(ab, {q1, 0.2}, r.u_ab);
            CHECK(std::abs(sc) > 1e-3);
            CHECK(std::abs(tr) < 1e-10);
        }
    }
}
