// Forward integration of the dipole system
//   da+/ds = (1/pi) (a+ - a-)^perp / |a+ - a-|^2 + grad_perp Q(a+)
//   da-/ds = (1/pi) (a+ - a-)^perp / |a+ - a-|^2 - grad_perp Q(a-)
// with collision guards, and the exit-time measurement map over a convex
// domain (event detection on the boundary crossing of a+).
#ifndef VORTEXJET_DYNAMICS_HPP
#define VORTEXJET_DYNAMICS_HPP

#include <optional>
#include <vector>

#include "vortexjet/domain.hpp"
#include "vortexjet/ode.hpp"
#include "vortexjet/potential.hpp"
#include "vortexjet/vec.hpp"

namespace vortexjet {

struct DipoleState {
    Vec2 plus;
    Vec2 minus;
};

inline Vec4 pack(const DipoleState& st) { return make_vec4(st.plus, st.minus); }
inline DipoleState unpack(const Vec4& v) { return {head2(v), tail2(v)}; }

// Shared interaction velocity (1/pi) d^perp / |d|^2, d = a+ - a-.
Vec2 interaction_velocity(const Vec2& d);

// Velocities of both vortices; throws Collision below the separation floor.
std::pair<Vec2, Vec2> dipole_rhs(const DipoleState& state, const Potential& Q,
                                 double d_min = 1e-8);

// One record of the measurement map S: exit time of a+, exit point, and the
// companion position when it is visible (a-(tau) outside Omega).
//
// Convention for a launch that is tangent (or outward) at s = 0: tau_plus = 0
// with exit_point = x, matching "first nonnegative time"; the spec flags this
// convention for boundary launches that never enter.
struct Measurement {
    double tau_plus = 0;
    Vec2 exit_point;
    std::optional<Vec2> companion;
};

class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(OdeSolution<4> sol) : sol_(std::move(sol)) {}

    double s_begin() const { return sol_.s_begin; }
    double s_end() const { return sol_.s_end; }
    DipoleState at(double s) const { return unpack(sol_.at(s)); }

    // Ordered sample times (accepted step starts plus the final time).
    std::vector<double> sample_times() const;

    const OdeSolution<4>& solution() const { return sol_; }

private:
    OdeSolution<4> sol_;
};

struct IntegrateOptions {
    double tol = 1e-11;    // local error per step, in [1e-13, 1e-6]
    double d_min = 1e-8;   // collision floor
    double max_step = std::numeric_limits<double>::infinity();
};

// Adaptive integration of the dipole system to s_end (either direction).
Trajectory integrate_dipole(const DipoleState& state0, const Potential& Q,
                            double s_end, const IntegrateOptions& opts = {});

struct ExitOptions {
    double tol = 1e-11;
    double d_min = 0;         // 0: use 1e-4 * domain diameter
    double s_max = 0;         // 0: use 10 * diameter / free-dipole speed
    double time_tol = 1e-11;  // exit-time refinement tolerance
    double graze_tol = 1e-12; // inward-distance threshold for tau = 0
    // Conservative bounds entering the pre-entry excursion detector: a cap on
    // |grad_perp Q| along the flight and a curvature/acceleration margin.
    double drift_bound = 2.0;
    double event_accel_margin = 25.0;
    bool keep_trajectory = true;
};

struct ExitResult {
    Measurement measurement;
    Trajectory trajectory; // valid through tau_plus (and a little past)
};

// Measurement map entry for the launch a+(0) = x (on the boundary or
// outside), a-(0) = y outside the closed domain. Throws Trapped when a+
// stays in the closure beyond s_max, Collision on a separation breach.
ExitResult exit_measurement_full(const Vec2& x, const Vec2& y, const Potential& Q,
                                 const ConvexDomain& domain,
                                 const ExitOptions& opts = {});

inline Measurement exit_measurement(const Vec2& x, const Vec2& y,
                                    const Potential& Q, const ConvexDomain& domain,
                                    const ExitOptions& opts = {}) {
    ExitOptions o = opts;
    o.keep_trajectory = false;
    return exit_measurement_full(x, y, Q, domain, o).measurement;
}

} // namespace vortexjet

#endif
