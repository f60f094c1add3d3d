// Tangent-launch construction: the companion position that realizes a
// prescribed launch velocity, the data-driven tangency search (no knowledge
// of grad Q at the base point), one-parameter launch families with velocity
// eps(alpha(t), beta t) in the boundary frame, the convexity certificate, and
// the one-sided exit-time slope estimate.
#ifndef VORTEXJET_FAMILY_HPP
#define VORTEXJET_FAMILY_HPP

#include <cstdint>
#include <vector>

#include "vortexjet/dynamics.hpp"
#include "vortexjet/fdiff.hpp"

namespace vortexjet {

// Abstract access to the measurement map S. Reconstruction code only sees
// this interface (plus the potential outside the enlarged domain).
class MeasureOracle {
public:
    virtual ~MeasureOracle() = default;
    virtual Measurement measure(const Vec2& x, const Vec2& y) const = 0;
    // High-resolution grazing mode used by the tangency search; by default
    // the same as measure().
    virtual Measurement measure_tangency(const Vec2& x, const Vec2& y) const {
        return measure(x, y);
    }
    long call_count() const { return calls_; }

protected:
    mutable long calls_ = 0;
};

// Simulation-backed oracle, optionally with deterministic additive noise on
// the reported exit time and positions (seeded per query).
class SimOracle final : public MeasureOracle {
public:
    SimOracle(const Potential& Q, const ConvexDomain& domain, ExitOptions opts = {},
              double noise = 0.0, uint64_t seed = 0);

    Measurement measure(const Vec2& x, const Vec2& y) const override;
    Measurement measure_tangency(const Vec2& x, const Vec2& y) const override;

private:
    Measurement perturb(Measurement m, const Vec2& x, const Vec2& y) const;

    Potential Q_;
    ConvexDomain domain_;
    ExitOptions opts_;
    double noise_;
    uint64_t seed_;
};

// Companion start position xi with a+(0) = p, a-(0) = xi realizing the
// launch velocity v of a+: xi = p + w^perp / (pi |w|^2), w = v - grad_perp Q(p).
Vec2 xi_for_velocity(const Vec2& p, const Vec2& v, const Vec2& gradQ_p);

// One-parameter family of companion starts. In exact mode the launch
// velocity is eps(alpha(t), beta t) in the boundary frame at p with
// alpha(t) = alpha_sign sqrt(1 - beta^2 t^2). In data-driven mode the family
// rotates a fixed-radius candidate around the measured tangency angle.
struct TangentFamily {
    Vec2 p;
    double theta_p = 0;
    Frame2 frame;
    double delta = 0.12; // valid parameter range [0, delta)
    int alpha_sign = +1;

    bool exact = false;
    double epsilon = 1.0;
    double beta = 1.0;
    Vec2 gradQ_p; // consumed only in exact mode

    double rho = 0;      // data-driven candidate radius
    double psi_star = 0; // tangency angle of xi around p (world)
    double rot_dir = 1;  // rotation direction that enters for t > 0

    Vec2 xi(double t) const;
    // Launch velocity of a+ at parameter t (exact mode).
    Vec2 launch_velocity_world(double t) const;
};

struct TangencySearchOptions {
    double margin = 0.05;      // enlargement margin (xi must stay outside)
    double rho = 0;            // candidate radius; 0: auto
    int scan_nodes = 96;
    double angular_tol = 1e-10;
    int alpha_sign = +1;
    double probe_offset = 2e-3; // t-offset used to classify travel direction
    double delta = 0.12;
    double psi_lo = 0;          // scan arc (world angle around p);
    double psi_hi = 2 * M_PI;   // full circle by default
};

// Locates the tangent companion position from measurements alone: bisection
// on the entering/non-entering transition over a circle of candidates around
// p. Returns a data-driven family turning into the domain for t > 0.
TangentFamily find_tangent_xi_from_data(const ConvexDomain& domain, double theta_p,
                                        const MeasureOracle& oracle,
                                        const TangencySearchOptions& opts);

// Exact family per the launch-velocity parametrization; checks that xi(t)
// stays outside the closed enlargement on [0, delta].
TangentFamily build_family(const ConvexDomain& domain, double theta_p,
                           const Vec2& gradQ_p, double epsilon, double beta,
                           double delta, int alpha_sign, double margin);

struct ConvexityOptions {
    double epsilon = 1.0; // tangent launch speed
    double ode_tol = 1e-12;
    double h = 2e-3; // finite-difference scale along the trajectory
};

// Second s-derivative at s = 0 of the signed distance of a+ along the
// tangent launch at gamma(theta_p); negative value certifies strict
// convexity w.r.t. Q there. Simulator-side check (uses Q).
double check_convexity(const ConvexDomain& domain, double theta_p,
                       const Potential& Q, const ConvexityOptions& opts = {});

struct EllPrimeOptions {
    std::vector<double> ts; // empty: geometric grid [1e-4, 1e-1] with 12 nodes
    int stencil_order = 4;
    int richardson_levels = 3;
};

// One-sided slope of the measured exit time at t = 0; throws
// NonpositiveSlope when the estimate is not positive.
DerivEstimate estimate_ell_prime(const TangentFamily& family,
                                 const MeasureOracle& oracle,
                                 const EllPrimeOptions& opts = {});

} // namespace vortexjet

#endif
