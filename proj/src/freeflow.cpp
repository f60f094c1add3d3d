#include "vortexjet/freeflow.hpp"

#include <cmath>

#include "vortexjet/dynamics.hpp"

namespace vortexjet {

Vec2 interaction_deriv(const Vec2& d, const Vec2* dirs, int k) {
    if (norm2(d) == 0.0) throw Collision("interaction derivative at zero separation");
    const std::complex<double> zbar = std::conj(to_complex(d));
    // g(z) = (-i/pi)/z, g^(k)(z) = (-i/pi) (-1)^k k! z^-(k+1).
    std::complex<double> gk(0.0, -1.0 / M_PI);
    double fact = 1.0;
    for (int i = 1; i <= k; ++i) fact *= -i;
    gk *= fact / std::pow(zbar, k + 1);
    for (int i = 0; i < k; ++i) gk *= std::conj(to_complex(dirs[i]));
    return to_vec(gk);
}

Mat2 interaction_jacobian(const Vec2& d) {
    return Mat2::columns(interaction_deriv1(d, {1, 0}), interaction_deriv1(d, {0, 1}));
}

DipoleState free_flow(double s, const PhasePoint& phi) {
    const Vec2 d = phi.x - phi.y;
    if (norm2(d) == 0.0) throw Collision("coincident initial positions in free flow");
    const Vec2 w = interaction_velocity(d);
    return {phi.x + s * w, phi.y + s * w};
}

Mat4 free_flow_jacobian_slope(const Vec2& d) {
    const Mat2 A = interaction_jacobian(d);
    return blocks(A, -1.0 * A, A, -1.0 * A);
}

Mat4 free_flow_jacobian(double s, const PhasePoint& phi) {
    const Vec2 d = phi.x - phi.y;
    if (norm2(d) == 0.0) throw Collision("coincident initial positions in free flow");
    return Mat4::identity() + free_flow_jacobian_slope(d) * s;
}

} // namespace vortexjet
