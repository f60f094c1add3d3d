// The flow-comparison (Stefanov-Uhlmann) identity
//   X(l, phi) - X0(l, phi) = int_0^l dX0/dphi(l - s, X(s, phi)) (V - V0)(X(s, phi)) ds
// between the true dipole flow X and the trivial-potential flow X0: the
// velocity-gap field, quadrature of the right-hand side, the residual check,
// and the measurable discrepancy samples R(t) along a launch curve.
#ifndef VORTEXJET_SU_HPP
#define VORTEXJET_SU_HPP

#include <functional>
#include <vector>

#include "vortexjet/dynamics.hpp"
#include "vortexjet/freeflow.hpp"

namespace vortexjet {

// (V - V0)(X) = (grad_perp Q(a+), -grad_perp Q(a-)) as a 4-vector.
Vec4 velocity_gap(const DipoleState& state, const Potential& Q);

struct SuOptions {
    double ode_tol = 1e-11;
    double quad_tol = 1e-10;
    double s_max = 0; // 0: dynamics default
};

// Max-norm of LHS - RHS of the identity for the launch phi = (x, y); the RHS
// is integrated with adaptive quadrature over the dense trajectory output.
double su_residual(const PhasePoint& phi, const Potential& Q,
                   const ConvexDomain& domain, const SuOptions& opts = {});

// One sample of the measurable discrepancy R(t) = X(l(t), phi(t)) -
// X0(l(t), phi(t)) along a one-parameter launch curve t -> (p, xi(t)).
// R is computed from measurement data only: the true endpoint from the exit
// measurement (companion must be visible), the trivial endpoint in closed
// form. R(0) = 0 since l(0) = 0.
struct DiscrepancySample {
    double t = 0;
    Vec4 R{};
    double ell = 0; // exit time l(t)
    Vec2 exit;
    Vec2 companion;
};

std::vector<DiscrepancySample>
sample_discrepancy(const Vec2& p, const std::function<Vec2(double)>& xi_of_t,
                   const Potential& Q, const ConvexDomain& domain,
                   const std::vector<double>& ts, const SuOptions& opts = {});

} // namespace vortexjet

#endif
