#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vortexjet/su.hpp"

using namespace vortexjet;

namespace {
const ConvexDomain& unit_disk() {
    static const auto d = ConvexDomain::circle({0, 1}, 1.0);
    return d;
}
} // namespace

TEST_CASE("velocity gap examples") {
    const DipoleState st{{0, 0}, {0, -2}};
    const auto z = velocity_gap(st, Potential::zero());
    CHECK(max_abs(z) == 0.0);

    const auto gx2 = velocity_gap(st, Potential::polynomial({{{0, 1}, 1.0}}));
    CHECK(gx2[0] == doctest::Approx(1.0));
    CHECK(gx2[1] == doctest::Approx(0.0));
    CHECK(gx2[2] == doctest::Approx(-1.0));
    CHECK(gx2[3] == doctest::Approx(0.0));

    const auto gq = velocity_gap(st, Potential::polynomial({{{0, 2}, 0.05}}));
    CHECK(gq[0] == doctest::Approx(0.0));
    CHECK(gq[1] == doctest::Approx(0.0));
    CHECK(gq[2] == doctest::Approx(0.2));
    CHECK(gq[3] == doctest::Approx(0.0));
}

TEST_CASE("identity residual vanishes for the zero potential") {
    const auto r = su_residual({{0, 0}, {1, 0}}, Potential::zero(), unit_disk());
    CHECK(r < 1e-12);
}

TEST_CASE("identity residual for linear and bump potentials") {
    const auto lin = Potential::polynomial({{{1, 0}, 0.1}, {{0, 1}, 0.2}});
    SuOptions opts;
    opts.ode_tol = 1e-11;
    opts.quad_tol = 1e-10;
    CHECK(su_residual({{0, 0}, {1, 0}}, lin, unit_disk(), opts) < 1e-7);

    const auto bump = Potential::gaussian_bumps({{{0.0, 1.0}, 0.05, 0.4}});
    CHECK(su_residual({{0, 0}, {1, 0}}, bump, unit_disk(), opts) < 1e-6);
}

TEST_CASE("discrepancy samples vanish for the zero potential and at t=0") {
    const Vec2 p{0, 0};
    auto xi = [](double t) { return Vec2{t / M_PI, -std::sqrt(1 - t * t) / M_PI}; };
    const auto samples =
        sample_discrepancy(p, xi, Potential::zero(), unit_disk(), {0.0, 0.01, 0.05});
    for (const auto& s : samples) CHECK(max_abs(s.R) < 1e-9);
    CHECK(samples[0].ell == 0.0);
}

TEST_CASE("discrepancy samples match direct quadrature of the identity RHS") {
    const auto lin = Potential::polynomial({{{1, 0}, 0.1}, {{0, 1}, 0.2}});
    const Vec2 p{0, 0};
    const Vec2 gp = lin.grad_perp(p);
    auto xi = [&](double t) {
        // Exact launch-speed-1 family: velocity eps(alpha, beta t) in the
        // frame at p (identity frame on this disk).
        const Vec2 v{std::sqrt(1 - t * t), t};
        const Vec2 w = v - gp;
        return p + perp(w) / (M_PI * norm2(w));
    };
    SuOptions opts;
    opts.ode_tol = 1e-11;
    opts.quad_tol = 1e-10;
    const auto ts = std::vector<double>{1e-4, 1e-3, 1e-2, 5e-2, 1e-1};
    const auto samples = sample_discrepancy(p, xi, lin, unit_disk(), ts, opts);
    for (size_t i = 0; i < ts.size(); ++i) {
        // The residual check *is* |R - RHS-quadrature|; reuse it.
        CHECK(su_residual({p, xi(ts[i])}, lin, unit_disk(), opts) < 1e-7);
        CHECK(samples[i].ell > 0);
    }
}

TEST_CASE("R/ell converges to grad_perp at the base point as t -> 0") {
    const auto lin = Potential::polynomial({{{1, 0}, 0.1}, {{0, 1}, 0.2}});
    const Vec2 p{0, 0};
    const Vec2 gp = lin.grad_perp(p);
    auto xi = [&](double t) {
        const Vec2 v{std::sqrt(1 - t * t), t};
        const Vec2 w = v - gp;
        return p + perp(w) / (M_PI * norm2(w));
    };
    const auto samples = sample_discrepancy(p, xi, lin, unit_disk(), {1e-3, 1e-4}, {});
    for (const auto& s : samples) {
        const Vec2 first = head2(s.R) / s.ell;
        CHECK(norm(first - gp) < 5e-3);
    }
    // Tolerance insensitivity: halving the ODE tolerance moves R very little.
    SuOptions tight;
    tight.ode_tol = 5e-12;
    const auto s2 = sample_discrepancy(p, xi, lin, unit_disk(), {1e-3, 1e-4}, tight);
    for (size_t i = 0; i < s2.size(); ++i)
        CHECK(max_abs(s2[i].R - samples[i].R) < 1e-8);
}

TEST_CASE("hidden companion raises") {
    // On a circle with Q = 0 the chord reflection symmetry makes the
    // companion visible exactly when y starts outside, so the hidden branch
    // needs an asymmetric domain (or potential). Search launches on an
    // ellipse until the companion ends up inside at exit.
    const auto ell = ConvexDomain::ellipse({0, 0}, 2.0, 0.9);
    const auto Q = Potential::gaussian_bumps({{{0.8, 0.0}, 0.06, 0.5}});
    bool found_hidden = false;
    for (double th = 0.1; th < 2 * M_PI && !found_hidden; th += 0.19) {
        const Vec2 x = ell.gamma(th);
        for (double ang = -1.1; ang <= 1.1 && !found_hidden; ang += 0.21) {
            const Vec2 dir = std::cos(ang) * ell.inward_normal(th) +
                             std::sin(ang) * ell.unit_tangent(th);
            for (double rho : {0.25, 0.45, 0.7}) {
                const Vec2 y = x + rho * perp(dir);
                if (ell.inside(y)) continue;
                try {
                    const auto m = exit_measurement(x, y, Q, ell);
                    if (m.tau_plus > 0 && !m.companion) {
                        found_hidden = true;
                        // And the sampler maps it to CompanionHidden.
                        auto xi = [&](double) { return y; };
                        CHECK_THROWS_AS((void)sample_discrepancy(x, xi, Q, ell, {0.5}),
                                        CompanionHidden);
                        break;
                    }
                } catch (const Error&) {
                    continue; // trapped/collision probes are fine to skip
                }
            }
        }
    }
    CHECK(found_hidden);
}
