#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vortexjet/family.hpp"
#include "vortexjet/freeflow.hpp"

using namespace vortexjet;

namespace {
const ConvexDomain& unit_disk() {
    static const auto d = ConvexDomain::circle({0, 1}, 1.0);
    return d;
}
constexpr double kThetaBase = -M_PI / 2; // base point (0, 0)
} // namespace

TEST_CASE("companion position for a prescribed velocity (tangent cases)") {
    // grad Q = 0: v = (1/pi, 0) gives xi = (0, -1).
    const Vec2 xi = xi_for_velocity({0, 0}, {1.0 / M_PI, 0}, {0, 0});
    CHECK(norm(xi - Vec2{0, -1}) < 1e-14);

    // Case with d1 Q > 0: the circle relation xi2^2 = xi1 (1/(pi c) - xi1).
    const double c = 0.3, eps = 0.8;
    const Vec2 xi2 = xi_for_velocity({0, 0}, {eps, 0}, {c, 0});
    const double lhs = xi2.x2 * xi2.x2;
    const double rhs = xi2.x1 * (1.0 / (M_PI * c) - xi2.x1);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    // Degenerate request: velocity equal to the drift.
    CHECK_THROWS_AS((void)xi_for_velocity({0, 0}, perp(Vec2{0.1, 0.2}), {0.1, 0.2}),
                    DegenerateVelocity);
}

TEST_CASE("prescribed velocity round-trips through the dipole field") {
    auto g = testutil::rng(21);
    const auto Q = Potential::sum(
        {Potential::polynomial({{{1, 0}, 0.07}, {{0, 1}, -0.12}, {{0, 2}, 0.03}}),
         Potential::gaussian_bumps({{{0.4, 0.6}, 0.05, 0.5}})});
    for (int i = 0; i < 50; ++i) {
        const Vec2 p = testutil::random_vec(g, -1, 1);
        Vec2 v = testutil::random_vec(g, -1.5, 1.5);
        if (norm(v - Q.grad_perp(p)) < 0.1) continue;
        const Vec2 xi = xi_for_velocity(p, v, Q.grad(p));
        auto [vp, vm] = dipole_rhs({p, xi}, Q);
        CHECK(norm(vp - v) < 1e-12);
    }
}

TEST_CASE("exact family on the unit disk reproduces the closed form") {
    const auto fam = build_family(unit_disk(), kThetaBase, {0, 0}, 1.0, 1.0, 0.12, +1, 0.05);
    for (double t : {0.0, 0.05, 0.1}) {
        const Vec2 expect =
            Vec2{t, -std::sqrt(1.0 - t * t)} / M_PI; // (t, -alpha)/pi in frame
        // Frame at (0,0) on this disk: e1 = (1,0), e2 = (0,1) -> world = frame.
        CHECK(norm(fam.xi(t) - expect) < 1e-13);
    }
    // Tangent launch at t = 0 grazes: measured exit time 0.
    const SimOracle oracle(Potential::zero(), unit_disk());
    CHECK(oracle.measure(fam.p, fam.xi(0)).tau_plus == 0.0);
}

TEST_CASE("family with xi entering the enlargement is rejected") {
    // A huge launch speed puts xi ~ 1/(pi eps) very close to p.
    CHECK_THROWS_AS((void)build_family(unit_disk(), kThetaBase, {0, 0}, 50.0, 1.0, 0.1,
                                       +1, 0.05),
                    XiInsideTildeOmega);
}

TEST_CASE("exit-time slope on the disk matches the chord oracle") {
    const SimOracle oracle(Potential::zero(), unit_disk());
    const auto fam = build_family(unit_disk(), kThetaBase, {0, 0}, 1.0, 1.0, 0.12, +1, 0.05);
    const auto est = estimate_ell_prime(fam, oracle);
    CHECK(std::abs(est.value - 2.0) < 1e-4 * 2.0);

    const auto fam2 = build_family(unit_disk(), kThetaBase, {0, 0}, 2.0, 1.0, 0.12, +1, 0.05);
    const auto est2 = estimate_ell_prime(fam2, oracle);
    CHECK(std::abs(est2.value - 1.0) < 1e-4);
}

TEST_CASE("a family tilted outward has nonpositive slope") {
    // beta -> -beta: realized by flipping the normal tilt via a negative-beta
    // velocity curve; build the family manually.
    TangentFamily fam = build_family(unit_disk(), kThetaBase, {0, 0}, 1.0, 1.0, 0.12, +1, 0.05);
    fam.beta = 1.0;
    // Mirror: t -> -t side never enters; emulate by rotating xi the other way.
    TangentFamily outward = fam;
    outward.exact = false;
    outward.rho = norm(fam.xi(0) - fam.p);
    const Vec2 rel = fam.xi(0) - fam.p;
    outward.psi_star = std::atan2(rel.x2, rel.x1);
    // Entering side for the disk family is increasing psi; go the other way.
    outward.rot_dir = -1.0;
    const SimOracle oracle(Potential::zero(), unit_disk());
    CHECK_THROWS_AS((void)estimate_ell_prime(outward, oracle), NonpositiveSlope);
}

TEST_CASE("convexity certificate on circles") {
    const auto Q0 = Potential::zero();
    ConvexityOptions co;
    co.epsilon = 1.0;
    CHECK(check_convexity(unit_disk(), kThetaBase, Q0, co) ==
          doctest::Approx(-1.0).epsilon(2e-4));
    co.epsilon = 0.7;
    CHECK(check_convexity(unit_disk(), kThetaBase, Q0, co) ==
          doctest::Approx(-0.49).epsilon(2e-4));
    const auto r2 = ConvexDomain::circle({0, 2}, 2.0);
    co.epsilon = 1.0;
    CHECK(check_convexity(r2, kThetaBase, Q0, co) == doctest::Approx(-0.5).epsilon(2e-4));
}

TEST_CASE("convexity w.r.t. Q fails under a strong inward-bending drift") {
    // Make the grazing trajectory curve into the disk. For Q = -c x1^2 / 2
    // the normal acceleration of the tangent launch at (0,0) is c - kappa eps^2,
    // positive for c > 1 on the unit disk at unit speed.
    const auto Q = Potential::polynomial({{{2, 0}, -1.5}});
    const double val = check_convexity(unit_disk(), kThetaBase, Q, {});
    CHECK(val > 0.0);
}

TEST_CASE("data-driven tangency search on the disk") {
    const SimOracle oracle(Potential::zero(), unit_disk());
    TangencySearchOptions opts;
    opts.margin = 0.05;
    opts.rho = 1.0;
    const auto fam = find_tangent_xi_from_data(unit_disk(), kThetaBase, oracle, opts);
    CHECK(norm(fam.xi(0) - Vec2{0, -1}) < 1e-6);

    // Linear potential: compare against the closed form through the true
    // gradient, in angle around p.
    const auto lin = Potential::polynomial({{{1, 0}, 0.1}, {{0, 1}, 0.2}});
    const SimOracle oracle2(lin, unit_disk());
    opts.rho = 0.45;
    const auto fam2 = find_tangent_xi_from_data(unit_disk(), kThetaBase, oracle2, opts);
    // Closed-form comparator constrained to the candidate radius: the
    // interaction speed is fixed at 1/(pi rho), and the tangency condition
    // (w + grad_perp Q(p)) . nu = 0 pins the launch direction.
    const Vec2 tau = unit_disk().unit_tangent(kThetaBase);
    const Vec2 nu = unit_disk().inward_normal(kThetaBase);
    const Vec2 gp = lin.grad_perp({0, 0});
    const double w_mag = 1.0 / (M_PI * opts.rho);
    const double w_nu = -dot(gp, nu);
    const double w_tau = std::sqrt(w_mag * w_mag - w_nu * w_nu); // alpha = +1 branch
    const Vec2 w = w_tau * tau + w_nu * nu;
    const Vec2 v_exact = w + gp;
    CHECK(dot(v_exact, nu) == doctest::Approx(0.0));
    const Vec2 xi_exact = xi_for_velocity({0, 0}, v_exact, lin.grad({0, 0}));
    const Vec2 rel_found = fam2.xi(0) - fam2.p;
    const Vec2 rel_exact = xi_exact - fam2.p;
    const double ang_found = std::atan2(rel_found.x2, rel_found.x1);
    const double ang_exact = std::atan2(rel_exact.x2, rel_exact.x1);
    CHECK(std::abs(ang_found - ang_exact) < 1e-6);

    // Entering side enters.
    CHECK(oracle2.measure(fam2.p, fam2.xi(0.01)).tau_plus > 0.0);
}

TEST_CASE("tangency search over an arc on the non-entering side") {
    // Candidates at angles below -pi/2 - 0.05 all launch a+ tangentially
    // downward-and-away from the disk: no transition in the arc.
    const SimOracle oracle(Potential::zero(), unit_disk());
    TangencySearchOptions opts;
    opts.margin = 0.05;
    opts.rho = 1.0;
    opts.scan_nodes = 16;
    opts.psi_lo = -M_PI / 2 - 0.6;
    opts.psi_hi = -M_PI / 2 - 0.05;
    CHECK_THROWS_AS((void)find_tangent_xi_from_data(unit_disk(), kThetaBase, oracle, opts),
                    NoTransitionFound);
}
