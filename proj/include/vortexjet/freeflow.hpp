// Closed-form dipole flow for the trivial potential and its exact Jacobian
// with respect to the four initial coordinates. Under Q = 0 both vortices
// translate rigidly with the shared interaction velocity, so
//   a+(s) = x + s w(x - y),  a-(s) = y + s w(x - y),
// and the Jacobian is Id + s M with the block structure M = [[A,-A],[A,-A]],
// A = Dw(x - y).
//
// The interaction velocity w(d) = (1/pi) d^perp / |d|^2 equals g(conj(z)) for
// g(z) = (-i/pi)/z under the identification (d1, d2) ~ d1 + i d2, so all of
// its derivative tensors are complex powers: D^k w[u_1..u_k] =
// g^(k)(conj(z)) * prod conj(u_i).
#ifndef VORTEXJET_FREEFLOW_HPP
#define VORTEXJET_FREEFLOW_HPP

#include <complex>

#include "vortexjet/dynamics.hpp"
#include "vortexjet/errors.hpp"
#include "vortexjet/vec.hpp"

namespace vortexjet {

struct PhasePoint {
    Vec2 x; // initial position of a+
    Vec2 y; // initial position of a-
};

inline std::complex<double> to_complex(const Vec2& v) { return {v.x1, v.x2}; }
inline Vec2 to_vec(const std::complex<double>& z) { return {z.real(), z.imag()}; }

// k-th derivative tensor of w contracted with k directions (k = 0 gives w).
Vec2 interaction_deriv(const Vec2& d, const Vec2* dirs, int k);

inline Vec2 interaction_deriv1(const Vec2& d, const Vec2& u) {
    return interaction_deriv(d, &u, 1);
}
inline Vec2 interaction_deriv2(const Vec2& d, const Vec2& u, const Vec2& v) {
    const Vec2 a[2] = {u, v};
    return interaction_deriv(d, a, 2);
}
inline Vec2 interaction_deriv3(const Vec2& d, const Vec2& u, const Vec2& v,
                               const Vec2& w) {
    const Vec2 a[3] = {u, v, w};
    return interaction_deriv(d, a, 3);
}

// Jacobian matrix A = Dw(d).
Mat2 interaction_jacobian(const Vec2& d);

DipoleState free_flow(double s, const PhasePoint& phi);

// Exact Jacobian of free_flow w.r.t. (x1, x2, y1, y2); identity at s = 0.
Mat4 free_flow_jacobian(double s, const PhasePoint& phi);

// The s-slope of the Jacobian: free_flow_jacobian(s) = Id + s * slope.
Mat4 free_flow_jacobian_slope(const Vec2& d);

} // namespace vortexjet

#endif
