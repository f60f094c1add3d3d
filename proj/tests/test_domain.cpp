#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vortexjet/domain.hpp"

using namespace vortexjet;

TEST_CASE("inside test on the unit disk") {
    const auto disk = ConvexDomain::circle({0, 1}, 1.0);
    CHECK(disk.inside({0, 1}));
    CHECK_FALSE(disk.inside({0, 2.5}));
    CHECK_FALSE(disk.inside({0, 0})); // boundary point, domain open
}

TEST_CASE("projection on the unit disk") {
    const auto disk = ConvexDomain::circle({0, 1}, 1.0);
    auto pr = disk.project_to_boundary({0, 0.5});
    CHECK(norm(pr.foot - Vec2{0, 0}) < 1e-12);
    CHECK(pr.signed_distance == doctest::Approx(0.5).epsilon(1e-12));
    pr = disk.project_to_boundary({0, -0.25});
    CHECK(norm(pr.foot - Vec2{0, 0}) < 1e-12);
    CHECK(pr.signed_distance == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK_THROWS_AS((void)disk.project_to_boundary({0, 1}), NoUniqueProjection);
}

TEST_CASE("normal coordinates on the unit disk") {
    const auto disk = ConvexDomain::circle({0, 1}, 1.0);
    const NormalChart chart(disk, -M_PI / 2); // base point (0, 0)
    CHECK(norm(chart.base_point() - Vec2{0, 0}) < 1e-14);

    auto nc = chart.to_normal_coords({0, 0.5});
    CHECK(std::abs(nc.z1) < 1e-12);
    CHECK(nc.z2 == doctest::Approx(0.5).epsilon(1e-12));

    // A boundary point a short arc away maps to (s, 0).
    const double s = 0.2;
    const double theta = -M_PI / 2 + s; // unit circle: arclength = angle
    nc = chart.to_normal_coords(disk.gamma(theta));
    CHECK(nc.z1 == doctest::Approx(s).epsilon(1e-10));
    CHECK(std::abs(nc.z2) < 1e-10);

    CHECK(chart.metric_factor(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("chart round trip on circle and ellipse") {
    auto g = testutil::rng(42);
    const auto disk = ConvexDomain::circle({0, 1}, 1.0);
    const auto ell = ConvexDomain::ellipse({0.5, -0.25}, 1.4, 0.8);
    for (const ConvexDomain* dom : {&disk, &ell}) {
        const NormalChart chart(*dom, testutil::uniform(g, 0, 2 * M_PI));
        for (int i = 0; i < 60; ++i) {
            const double z1 = testutil::uniform(g, -0.3, 0.3);
            const double z2 = testutil::uniform(g, -0.4, 0.4) * dom->tube_radius();
            const Vec2 x = chart.from_normal_coords(z1, z2);
            const auto nc = chart.to_normal_coords(x);
            const Vec2 rt = chart.from_normal_coords(nc.z1, nc.z2);
            CHECK(norm(rt - x) < 1e-10);
            // Inside iff positive normal coordinate (within the tube).
            if (std::abs(nc.z2) > 1e-12) CHECK(dom->inside(x) == (nc.z2 > 0));
        }
    }
}

TEST_CASE("curvature closed forms and finite-difference cross-check") {
    const auto c2 = ConvexDomain::circle({0.3, -1}, 2.0);
    for (double th : {0.0, 0.7, 2.9}) CHECK(c2.curvature(th) == doctest::Approx(0.5).epsilon(1e-12));

    const auto ell = ConvexDomain::ellipse({0, 0}, 2.0, 1.0);
    CHECK(ell.curvature(0.0) == doctest::Approx(2.0).epsilon(1e-12)); // a/b^2 at major axis

    // Finite-difference curvature of gamma matches the analytic value
    // (4th-order stencils keep roundoff below the 1e-8 target).
    auto fd_curvature = [](const ConvexDomain& dom, double th) {
        const double h = 1e-3;
        const Vec2 fp2 = dom.gamma(th + 2 * h), fp1 = dom.gamma(th + h);
        const Vec2 fm1 = dom.gamma(th - h), fm2 = dom.gamma(th - 2 * h);
        const Vec2 f0 = dom.gamma(th);
        const Vec2 g1 = (-1.0 * fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12 * h);
        const Vec2 g2 =
            (-1.0 * fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - 1.0 * fm2) / (12 * h * h);
        const double sp = norm(g1);
        return cross(g1, g2) / (sp * sp * sp);
    };
    const auto disk = ConvexDomain::circle({0, 1}, 1.0);
    for (double th : {0.1, 1.3, 4.0}) {
        CHECK(std::abs(fd_curvature(disk, th) - 1.0) < 1e-8);
        CHECK(std::abs(fd_curvature(ell, th) - ell.curvature(th)) < 1e-6);
    }
}

TEST_CASE("polar domain is a valid convex primitive") {
    const auto pol = ConvexDomain::polar({0, 0}, 1.0, {0.04, 0.02}, {0.03});
    CHECK(pol.inside({0, 0}));
    for (double th : {0.0, 1.0, 2.0, 5.0}) CHECK(pol.curvature(th) > 0);
    const NormalChart chart(pol, 0.3);
    const Vec2 x = chart.from_normal_coords(0.1, 0.05);
    const auto nc = chart.to_normal_coords(x);
    CHECK(nc.z1 == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(nc.z2 == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("non-convex polar coefficients are rejected") {
    CHECK_THROWS_AS(ConvexDomain::polar({0, 0}, 1.0, {0.5}, {}), Error);
}

TEST_CASE("tilde margin formula") {
    CHECK(tilde_omega_margin(1.0, 0.05) == doctest::Approx(0.05));
    CHECK(tilde_omega_margin(0.0, 0.1) == doctest::Approx(0.1));
    CHECK(tilde_omega_margin(10.0, 0.05) == doctest::Approx(1.0 / (40.0 * M_PI)).epsilon(1e-14));
}

TEST_CASE("inside_tilde membership") {
    const auto disk = ConvexDomain::circle({0, 1}, 1.0);
    const double margin = 0.05;
    CHECK(inside_tilde(disk, {0, 1}, margin));       // interior
    CHECK(inside_tilde(disk, {0, -0.04}, margin));   // in the collar
    CHECK_FALSE(inside_tilde(disk, {0, -0.06}, margin));
    CHECK_FALSE(inside_tilde(disk, {0, -2.0}, margin)); // far outside
}
