#include <cmath>
#include <cstring>

#include "curv2d/system.hpp"
#include "doctest.h"

using namespace curv2d;

namespace {

SystemModel unicycle() { return builtin_system("conformal_frame", {{"phi", "0"}}); }

// hyperbolic half-plane frame f = (q2 cos u, q2 sin u): metric conformal
// factor e^{2 phi} = 1/q2^2
SystemModel hyperbolic() { return builtin_system("conformal_frame", {{"phi", "-log(q2)"}}); }

}  // namespace

TEST_SUITE("system")
{
    TEST_CASE("parse_system round trips and evaluates")
    {
        const char* src = R"##({
            "name": "circle-frame",
            "f1": "cos(u)",
            "f2": "sin(u)",
            "control_domain": {"kind": "circle"}
        })##";
        SystemModel m = parse_system(src);
        CHECK(m.name() == "circle-frame");
        Jet j = m.jet({0.4, -0.2}, 0.0, 1);
        CHECK(j.partial(0, 0, 0, 1) == doctest::Approx(0.0));  // d f1/du (q,0) = 0
        CHECK(j.partial(1, 0, 0, 1) == doctest::Approx(1.0));  // d f2/du (q,0) = 1

        SystemModel again = parse_system(m.to_json());
        auto a = m.evaluator().eval(0.3, 0.9, 1.1);
        auto b = again.evaluator().eval(0.3, 0.9, 1.1);
        CHECK(std::memcmp(&a.x, &b.x, sizeof a.x) == 0);
        CHECK(std::memcmp(&a.y, &b.y, sizeof a.y) == 0);
    }

    TEST_CASE("second-derivative example")
    {
        // f2 = 1 - exp(2*a0) u^2 with a0 = 0: d2 f2/du2 = -2
        SystemModel m = parse_system(R"##({"f1": "u", "f2": "1 - exp(2*0)*u^2",
                                          "control_domain": {"kind": "interval", "min": -1, "max": 1}})##");
        Jet j = m.jet({0, 0}, 0.0, 2);
        CHECK(j.partial(1, 0, 0, 2) == doctest::Approx(-2.0));
    }

    TEST_CASE("grammar rejection surfaces as parse error")
    {
        CHECK_THROWS_AS((void)parse_system(R"##({"f1": "q3", "f2": "u",
            "control_domain": {"kind": "circle"}})##"),
                        Error);
        CHECK_THROWS_AS((void)parse_system(R"##({"f1": "u", "f2": "u"})##"), Error);  // no domain
        CHECK_THROWS_AS((void)parse_system("not json at all"), Error);
        CHECK_THROWS_AS(
            (void)parse_system(
                R"##({"f1": "u", "f2": "u", "control_domain": {"kind": "interval", "min": 2, "max": 1}})##"),
            Error);
    }

    TEST_CASE("builtin families")
    {
        SystemModel flat = unicycle();
        auto f = flat.evaluator().eval(0.0, 0.0, 0.5);
        CHECK(f.x == doctest::Approx(std::cos(0.5)));
        CHECK(f.y == doctest::Approx(std::sin(0.5)));
        CHECK(flat.domain().kind == ControlDomain::Kind::circle);

        SystemModel hyp = hyperbolic();
        auto g = hyp.evaluator().eval(0.3, 2.0, 0.25);
        CHECK(g.x == doctest::Approx(2.0 * std::cos(0.25)).epsilon(1e-14));
        CHECK(g.y == doctest::Approx(2.0 * std::sin(0.25)).epsilon(1e-14));

        SystemModel nf = builtin_system("normal_form", {{"a", "q2"}});
        auto h = nf.evaluator().eval(0.1, 0.2, 0.3);
        CHECK(h.x == doctest::Approx(0.3));
        CHECK(h.y == doctest::Approx(1.0 - std::exp(0.4) * 0.09).epsilon(1e-14));
        CHECK(nf.domain().kind == ControlDomain::Kind::interval);
        CHECK(nf.domain().min == doctest::Approx(-0.9));

        SystemModel ab = builtin_system("abnormal_form", {{"a", "0.2*q1"}});
        auto k = ab.evaluator().eval(0.5, 0.0, 0.75);
        CHECK(k.y == doctest::Approx(std::exp(0.2) * 0.0625).epsilon(1e-14));
        CHECK(ab.domain().max > 1.0);  // the abnormal control u = 1 must be inside

        SystemModel z = builtin_system("zermelo", {{"phi", "0"}, {"drift1", "0.2"}, {"drift2", "0.1"}});
        auto w = z.evaluator().eval(0, 0, 0.0);
        CHECK(w.x == doctest::Approx(1.2));
        CHECK(w.y == doctest::Approx(0.1));

        CHECK_THROWS_AS((void)builtin_system("pendulum", {}), Error);
    }

    TEST_CASE("jet restriction agrees with lower order")
    {
        SystemModel m = builtin_system("normal_form", {{"a", "0.3*q2 + 0.1*q1*q2"}});
        Jet j4 = m.jet({0.2, -0.1}, 0.3, 4);
        Jet j3 = m.jet({0.2, -0.1}, 0.3, 3);
        Jet r = j4.restrict_order(3);
        for (int i = 0; i <= 3; ++i)
            for (int j = 0; i + j <= 3; ++j)
                for (int k = 0; i + j + k <= 3; ++k)
                    for (int c = 0; c < 2; ++c)
                        CHECK(r.partial(c, i, j, k) == j3.partial(c, i, j, k));
    }

    TEST_CASE("jets match central finite differences")
    {
        // order-3 entries vs central differences of order-2 jets in each
        // variable, h = 1e-4, relative 1e-5
        SystemModel m = builtin_system("zermelo",
                                       {{"phi", "0.2*q1 + 0.1*q2^2"}, {"drift1", "0.1*q2"}, {"drift2", "0"}});
        StatePoint q{0.3, -0.4};
        double u = 0.7, h = 1e-4;
        Jet j3 = m.jet(q, u, 3);
        auto check_dir = [&](int di, int dj, int dk) {
            Jet plus = m.jet({q.q1 + di * h, q.q2 + dj * h}, u + dk * h, 2);
            Jet minus = m.jet({q.q1 - di * h, q.q2 - dj * h}, u - dk * h, 2);
            for (int i = 0; i <= 2; ++i)
                for (int j = 0; i + j <= 2; ++j)
                    for (int k = 0; i + j + k <= 2; ++k) {
                        if (i + di + j + dj + k + dk > 3) continue;
                        for (int c = 0; c < 2; ++c) {
                            double fd = (plus.partial(c, i, j, k) - minus.partial(c, i, j, k)) / (2 * h);
                            double exact = j3.partial(c, i + di, j + dj, k + dk);
                            CHECK(fd == doctest::Approx(exact).epsilon(1e-5));
                        }
                    }
        };
        check_dir(1, 0, 0);
        check_dir(0, 1, 0);
        check_dir(0, 0, 1);
    }

    TEST_CASE("circle systems are periodic in u")
    {
        SystemModel m = hyperbolic();
        const double tau = 6.283185307179586476925286766559;
        auto a = m.evaluator().eval(0.5, 1.5, 0.75);
        auto b = m.evaluator().eval(0.5, 1.5, 0.75 + tau);
        CHECK(a.x == doctest::Approx(b.x).epsilon(1e-14));
        CHECK(a.y == doctest::Approx(b.y).epsilon(1e-14));
    }

    TEST_CASE("evaluation is deterministic")
    {
        SystemModel m = builtin_system("normal_form", {{"a", "0.3*q2+0.2*q2^2"}});
        Jet a = m.jet({0.1, 0.2}, 0.3, 4);
        Jet b = m.jet({0.1, 0.2}, 0.3, 4);
        for (int i = 0; i <= 4; ++i)
            for (int j = 0; i + j <= 4; ++j)
                for (int k = 0; i + j + k <= 4; ++k)
                    for (int c = 0; c < 2; ++c) {
                        double x = a.partial(c, i, j, k), y = b.partial(c, i, j, k);
                        CHECK(std::memcmp(&x, &y, sizeof x) == 0);
                    }
    }
}
