#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vortexjet/jet.hpp"
#include "vortexjet/vec.hpp"

using namespace vortexjet;

TEST_CASE("perp is an involution up to sign and an isometry") {
    auto g = testutil::rng(101);
    for (int i = 0; i < 200; ++i) {
        const Vec2 v = testutil::random_vec(g, -10, 10);
        const Vec2 pp = perp(perp(v));
        CHECK(pp.x1 == doctest::Approx(-v.x1).epsilon(1e-15));
        CHECK(pp.x2 == doctest::Approx(-v.x2).epsilon(1e-15));
        CHECK(norm(perp(v)) == doctest::Approx(norm(v)).epsilon(1e-15));
        CHECK(std::abs(dot(perp(v), v)) < 1e-12 * (1.0 + norm2(v)));
    }
}

TEST_CASE("unperp inverts perp") {
    const Vec2 v{0.3, -1.7};
    const Vec2 u = unperp(perp(v));
    CHECK(u.x1 == doctest::Approx(v.x1));
    CHECK(u.x2 == doctest::Approx(v.x2));
}

TEST_CASE("frame round trip and tensor rotation") {
    const double a = 0.7;
    const Frame2 f{{1.0, -2.0}, {std::cos(a), std::sin(a)}, {-std::sin(a), std::cos(a)}};
    auto g = testutil::rng(7);
    for (int i = 0; i < 50; ++i) {
        const Vec2 x = testutil::random_vec(g, -3, 3);
        const Vec2 rt = f.from_frame_point(f.to_frame_point(x));
        CHECK(norm(rt - x) < 1e-13);
    }
}

TEST_CASE("derivative table contraction equals explicit polynomial derivatives") {
    // Q = 2 x1^2 x2 at x = (1.5, -0.5): build the table by hand.
    DerivTable t(3);
    const double x1 = 1.5, x2 = -0.5;
    t.at(0, 0) = 2 * x1 * x1 * x2;
    t.at(1, 0) = 4 * x1 * x2;
    t.at(0, 1) = 2 * x1 * x1;
    t.at(2, 0) = 4 * x2;
    t.at(1, 1) = 4 * x1;
    t.at(0, 2) = 0;
    t.at(3, 0) = 0;
    t.at(2, 1) = 4;
    t.at(1, 2) = 0;
    t.at(0, 3) = 0;

    const Vec2 u{0.2, -1.0}, v{1.0, 3.0};
    // D^2 Q[u,v] = Quu-style bilinear form.
    const double expect = t(2, 0) * u.x1 * v.x1 + t(1, 1) * (u.x1 * v.x2 + u.x2 * v.x1) +
                          t(0, 2) * u.x2 * v.x2;
    const Vec2 uv[2] = {u, v};
    CHECK(t.contract(uv, 2) == doctest::Approx(expect).epsilon(1e-14));

    // grad_perp and its first derivative.
    const Vec2 gp = t.grad_perp();
    CHECK(gp.x1 == doctest::Approx(t(0, 1)));
    CHECK(gp.x2 == doctest::Approx(-t(1, 0)));
    const Vec2 dgp = t.dgp1(u);
    CHECK(dgp.x1 == doctest::Approx(t(1, 1) * u.x1 + t(0, 2) * u.x2));
    CHECK(dgp.x2 == doctest::Approx(-(t(2, 0) * u.x1 + t(1, 1) * u.x2)));
}
