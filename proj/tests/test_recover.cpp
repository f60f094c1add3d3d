#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vortexjet/recover.hpp"

using namespace vortexjet;

namespace {

const ConvexDomain& unit_disk() {
    static const auto d = ConvexDomain::circle({0, 1}, 1.0);
    return d;
}
constexpr double kThetaBase = -M_PI / 2; // base point (0, 0)

Potential linear_q() { return Potential::polynomial({{{1, 0}, 0.1}, {{0, 1}, 0.2}}); }

// Fields built from the true potential (bypassing recovery) to test the
// extraction machinery in isolation.
BoundaryVectorField exact_grad_field(const ConvexDomain& dom, double theta_c,
                                     const Potential& Q, double span, int n) {
    BoundaryVectorField f;
    f.theta_center = theta_c;
    const NormalChart chart(dom, theta_c);
    for (int i = 0; i < n; ++i) {
        const double s = -span + 2 * span * i / (n - 1);
        const double th = chart.theta_at(s);
        f.sigmas.push_back(s);
        f.thetas.push_back(th);
        f.values.push_back(Q.grad(dom.gamma(th)));
        f.uncertainties.push_back({0, 0});
    }
    std::vector<double> v1, v2;
    for (const auto& v : f.values) {
        v1.push_back(v.x1);
        v2.push_back(v.x2);
    }
    f.fit1 = PolyFit(f.sigmas, v1, std::min(8, n - 1));
    f.fit2 = PolyFit(f.sigmas, v2, std::min(8, n - 1));
    return f;
}

BoundaryMatrixField exact_hess_field(const ConvexDomain& dom, double theta_c,
                                     const Potential& Q, double span, int n) {
    BoundaryMatrixField f;
    f.theta_center = theta_c;
    const NormalChart chart(dom, theta_c);
    std::vector<double> h11, h12, h22;
    for (int i = 0; i < n; ++i) {
        const double s = -span + 2 * span * i / (n - 1);
        const double th = chart.theta_at(s);
        const auto t = Q.eval_partials(dom.gamma(th), 2);
        f.sigmas.push_back(s);
        f.thetas.push_back(th);
        f.values.push_back(Mat2{t(2, 0), t(1, 1), t(1, 1), t(0, 2)});
        h11.push_back(t(2, 0));
        h12.push_back(t(1, 1));
        h22.push_back(t(0, 2));
    }
    const int deg = std::min(8, n - 1);
    f.fit11 = PolyFit(f.sigmas, h11, deg);
    f.fit12 = PolyFit(f.sigmas, h12, deg);
    f.fit22 = PolyFit(f.sigmas, h22, deg);
    return f;
}

} // namespace

TEST_CASE("restricted t-derivative grids match direct finite differences") {
    // Verify every assembled grid term of the stage machinery against
    // central differences of its defining expression on true trajectories.
    // Third-order terms are restricted to monomials whose (1,2) and (0,3)
    // partials vanish identically, so the kernel-zeroed known jets coincide
    // with the truth and the comparison isolates the assembly itself.
    const auto Q = Potential::polynomial({{{1, 0}, 0.06},
                                          {{0, 1}, -0.04},
                                          {{0, 2}, 0.05},
                                          {{1, 1}, 0.03},
                                          {{3, 0}, 0.02},
                                          {{2, 1}, 0.015}});
    const auto& dom = unit_disk();
    const auto outside = OutsidePotential(Q, dom, 0.05);
    ExitOptions eo;
    eo.tol = 1e-12;
    const SimOracle oracle(Q, dom, eo);

    const TangentFamily fam =
        build_family(dom, kThetaBase, Q.grad(dom.gamma(kThetaBase)), 1.0, 1.0, 0.13,
                     +1, 0.05);
    const auto gf = exact_grad_field(dom, kThetaBase, Q, 0.45, 19);
    const auto hf = exact_hess_field(dom, kThetaBase, Q, 0.45, 19);

    RecoverOptions opts;
    opts.margin = 0.05;
    const auto g =
        detail::build_stage_grids(dom, fam, oracle, outside, gf, &hf, 2, opts);

    // Truth by re-simulation: partial t-derivatives at fixed s = l(t).
    IntegrateOptions io;
    io.tol = 1e-12;
    const Frame2& fr = fam.frame;
    auto state_at = [&](double t, double s) {
        const auto traj = integrate_dipole({fam.p, fam.xi(t)}, Q, s + 1e-9, io);
        return traj.at(s);
    };

    for (size_t i : {size_t(6), size_t(8), size_t(9)}) {
        const double t = g.ts[i];
        const double ell = g.ell[i];
        const double h = 2e-3;
        // 7-node central stencils in t at fixed s = ell.
        std::vector<double> nodes;
        std::vector<Vec2> ap, am;
        std::vector<Vec4> gap, mg;
        for (int j = -3; j <= 3; ++j) {
            nodes.push_back(j * h);
            const DipoleState st = state_at(t + j * h, ell);
            ap.push_back(fr.to_frame_point(st.plus));
            am.push_back(fr.to_frame_point(st.minus));
            const Vec4 vg = velocity_gap(st, Q);
            const Vec4 vg_f =
                make_vec4(fr.to_frame_vec(head2(vg)), fr.to_frame_vec(tail2(vg)));
            gap.push_back(vg_f);
            const Vec2 d_f = ap.back() - am.back();
            const Mat2 A = interaction_jacobian(d_f);
            const Vec2 Avd = A * (head2(vg_f) - tail2(vg_f));
            mg.push_back(make_vec4(Avd, Avd));
        }
        const auto w = fornberg_weights(0.0, nodes, 3);
        auto fd_vec2 = [&](const std::vector<Vec2>& vs, int k) {
            Vec2 acc{};
            for (size_t j = 0; j < vs.size(); ++j) acc += w[k][j] * vs[j];
            return acc;
        };
        auto fd_vec4 = [&](const std::vector<Vec4>& vs, int k) {
            Vec4 acc{};
            for (size_t j = 0; j < vs.size(); ++j) acc = acc + w[k][j] * vs[j];
            return acc;
        };

        CHECK(norm(fd_vec2(ap, 1) - g.P1p[i]) < 1e-5);
        CHECK(norm(fd_vec2(am, 1) - g.P1m[i]) < 1e-5);
        CHECK(norm(fd_vec2(ap, 2) - g.P2p[i]) < 2e-4);
        CHECK(norm(fd_vec2(am, 2) - g.P2m[i]) < 2e-4);
        CHECK(norm(fd_vec2(ap, 3) - g.P3p[i]) < 2e-3);

        CHECK(max_abs(fd_vec4(gap, 1) - g.u1[i]) < 1e-5);
        CHECK(max_abs(fd_vec4(gap, 2) - g.u2[i]) < 1e-4);
        CHECK(max_abs(fd_vec4(gap, 3) - g.u3[i]) < 1e-3);

        CHECK(max_abs(fd_vec4(mg, 0) - g.m0[i]) < 1e-7);
        CHECK(max_abs(fd_vec4(mg, 1) - g.m1[i]) < 1e-4);
        CHECK(max_abs(fd_vec4(mg, 2) - g.m2[i]) < 1e-3);
        CHECK(max_abs(fd_vec4(mg, 3) - g.m3[i]) < 1e-2);
    }
}

TEST_CASE("hessian extraction with exact fields recovers the normal column") {
    // Isolates the K = 1 limit assembly from field-recovery error.
    const auto Q = Potential::polynomial({{{0, 2}, 0.05}, {{1, 0}, 0.1}, {{1, 1}, 0.04}});
    const auto& dom = unit_disk();
    const auto outside = OutsidePotential(Q, dom, 0.05);
    const SimOracle oracle(Q, dom);
    const Vec2 p = dom.gamma(kThetaBase);
    const TangentFamily fam =
        build_family(dom, kThetaBase, Q.grad(p), 1.0, 1.0, 0.13, +1, 0.05);
    const auto gf = exact_grad_field(dom, kThetaBase, Q, 0.45, 11);

    RecoverOptions opts;
    opts.margin = 0.05;
    const auto grids =
        detail::build_stage_grids(dom, fam, oracle, outside, gf, nullptr, 1, opts);
    const auto ex = detail::extract_normal_derivative(grids, outside, opts);

    // Truth: d2 grad_perp Q(0) = (d22 Q, -d12 Q) at p in the frame (= world here).
    const auto jets = Q.eval_partials(p, 2);
    CHECK(std::abs(ex.normal_pair.x1 - jets(0, 2)) <
          0.02 * std::max(1.0, std::abs(jets(0, 2))));
    CHECK(std::abs(-ex.normal_pair.x2 - jets(1, 1)) < 0.02);
}

TEST_CASE("gradient recovery: zero potential") {
    const auto& dom = unit_disk();
    const auto Q0 = Potential::zero();
    const SimOracle oracle(Q0, dom);
    const auto outside = OutsidePotential(Q0, dom, 0.05);
    RecoverOptions opts;
    opts.margin = 0.05;
    const auto ge = recover_gradient(dom, kThetaBase, oracle, outside, opts);
    CHECK(norm(ge.gradient) < 1e-9);
    CHECK(ge.consistency < 1e-9);
}

TEST_CASE("gradient recovery: linear potential to 1e-3 relative") {
    const auto& dom = unit_disk();
    const auto Q = linear_q();
    const SimOracle oracle(Q, dom);
    const auto outside = OutsidePotential(Q, dom, 0.05);
    RecoverOptions opts;
    opts.margin = 0.05;
    for (double theta : {kThetaBase, 0.4, 2.2}) {
        const auto ge = recover_gradient(dom, theta, oracle, outside, opts);
        const Vec2 truth = Q.grad(dom.gamma(theta));
        CHECK(norm(ge.gradient - truth) < 1e-3 * norm(truth));
    }
}

TEST_CASE("gradient recovery: stage-1 and stage-2 families agree") {
    const auto& dom = unit_disk();
    const auto Q = Potential::sum(
        {Potential::polynomial({{{0, 2}, 0.05}}),
         Potential::gaussian_bumps({{{0.2, 1.1}, 0.02, 0.5}})});
    const SimOracle oracle(Q, dom);
    const auto outside = OutsidePotential(Q, dom, 0.05);
    RecoverOptions opts;
    opts.margin = 0.05;
    const auto stage1 = recover_gradient(dom, kThetaBase, oracle, outside, opts);
    // Stage-2 family through the true gradient (the strongest check).
    const auto fam = build_family(dom, kThetaBase, Q.grad(dom.gamma(kThetaBase)), 1.0,
                                  1.0, 0.13, +1, 0.05);
    const auto stage2 = recover_gradient_with_family(dom, fam, oracle, outside, opts);
    const Vec2 truth = Q.grad(dom.gamma(kThetaBase));
    CHECK(norm(stage1.gradient - truth) < 2e-3);
    CHECK(norm(stage2.gradient - truth) < 2e-3);
    const double combined = norm(stage1.uncertainty) + norm(stage2.uncertainty) + 1e-4;
    CHECK(norm(stage1.gradient - stage2.gradient) < combined);
}

TEST_CASE("gradient field on an arc: linear potential stays constant") {
    const auto& dom = unit_disk();
    const auto Q = linear_q();
    const SimOracle oracle(Q, dom);
    const auto outside = OutsidePotential(Q, dom, 0.05);
    RecoverOptions opts;
    opts.margin = 0.05;
    const auto field = recover_gradient_field(dom, kThetaBase,
                                              {-0.2, -0.1, 0.0, 0.1, 0.2}, oracle,
                                              outside, opts);
    for (const auto& v : field.values)
        CHECK(norm(v - Vec2{0.1, 0.2}) < 1e-3 * norm(Vec2{0.1, 0.2}));
    // Empty arc gives an empty field.
    const auto empty = recover_gradient_field(dom, kThetaBase, {}, oracle, outside, opts);
    CHECK(empty.empty());
}

TEST_CASE("hessian recovery: zero potential") {
    const auto& dom = unit_disk();
    const auto Q0 = Potential::zero();
    const SimOracle oracle(Q0, dom);
    const auto outside = OutsidePotential(Q0, dom, 0.05);
    RecoverOptions opts;
    opts.margin = 0.05;
    const auto he = recover_hessian(dom, kThetaBase, oracle, outside, opts);
    CHECK(std::abs(he.hessian_frame.a11) < 1e-6);
    CHECK(std::abs(he.hessian_frame.a12) < 1e-6);
    CHECK(std::abs(he.hessian_frame.a22) < 1e-6);
}

TEST_CASE("hessian recovery: quadratic monomial within 5 percent") {
    const auto& dom = unit_disk();
    const auto Q = Potential::polynomial({{{0, 2}, 0.05}});
    const SimOracle oracle(Q, dom);
    const auto outside = OutsidePotential(Q, dom, 0.05);
    RecoverOptions opts;
    opts.margin = 0.05;
    const auto he = recover_hessian(dom, kThetaBase, oracle, outside, opts);
    // At p = (0,0) the frame normal is the x2 axis: d22 Q = 0.1.
    CHECK(std::abs(he.hessian_frame.a22 - 0.1) < 0.005);
    CHECK(he.asymmetry <= he.uncertainty_frame.a12);
}
