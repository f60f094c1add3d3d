#include "vortexjet/su.hpp"

#include <cmath>

#include "vortexjet/quadrature.hpp"

namespace vortexjet {

Vec4 velocity_gap(const DipoleState& state, const Potential& Q) {
    return make_vec4(Q.grad_perp(state.plus), -Q.grad_perp(state.minus));
}

double su_residual(const PhasePoint& phi, const Potential& Q,
                   const ConvexDomain& domain, const SuOptions& opts) {
    ExitOptions eo;
    eo.tol = opts.ode_tol;
    eo.s_max = opts.s_max;
    const ExitResult res = exit_measurement_full(phi.x, phi.y, Q, domain, eo);
    const double ell = res.measurement.tau_plus;
    if (ell == 0.0) {
        // Both sides vanish for an instantly-leaving launch.
        return 0.0;
    }
    const Trajectory& traj = res.trajectory;

    const DipoleState end_state = traj.at(ell);
    const Vec4 lhs = pack(end_state) - pack(free_flow(ell, phi));

    auto integrand = [&](double s) -> Vec4 {
        const DipoleState st = traj.at(s);
        const Vec4 gap = velocity_gap(st, Q);
        const Mat4 J = Mat4::identity() +
                       free_flow_jacobian_slope(st.plus - st.minus) * (ell - s);
        return J * gap;
    };
    const Vec4 rhs = adaptive_integrate<Vec4>(integrand, 0.0, ell, opts.quad_tol,
                                              [](const Vec4& v) { return max_abs(v); });
    return max_abs(lhs - rhs);
}

std::vector<DiscrepancySample>
sample_discrepancy(const Vec2& p, const std::function<Vec2(double)>& xi_of_t,
                   const Potential& Q, const ConvexDomain& domain,
                   const std::vector<double>& ts, const SuOptions& opts) {
    std::vector<DiscrepancySample> out;
    out.reserve(ts.size());
    ExitOptions eo;
    eo.tol = opts.ode_tol;
    eo.s_max = opts.s_max;
    eo.keep_trajectory = false;
    for (const double t : ts) {
        const Vec2 xi = xi_of_t(t);
        const Measurement m = exit_measurement(p, xi, Q, domain, eo);
        if (!m.companion)
            throw CompanionHidden("companion vortex inside the domain at exit");
        DiscrepancySample s;
        s.t = t;
        s.ell = m.tau_plus;
        s.exit = m.exit_point;
        s.companion = *m.companion;
        const DipoleState ff = free_flow(m.tau_plus, PhasePoint{p, xi});
        s.R = make_vec4(s.exit, s.companion) - make_vec4(ff.plus, ff.minus);
        out.push_back(s);
    }
    return out;
}

} // namespace vortexjet
