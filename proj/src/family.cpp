#include "vortexjet/family.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vortexjet/freeflow.hpp"

namespace vortexjet {

namespace {

uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

uint64_t hash_double(double x) {
    uint64_t u;
    std::memcpy(&u, &x, sizeof(u));
    return u;
}

double unit_noise(uint64_t h) {
    // Deterministic value in [-1, 1).
    return 2.0 * (double(splitmix64(h) >> 11) * 0x1.0p-53) - 1.0;
}

} // namespace

SimOracle::SimOracle(const Potential& Q, const ConvexDomain& domain,
                     ExitOptions opts, double noise, uint64_t seed)
    : Q_(Q), domain_(domain), opts_(opts), noise_(noise), seed_(seed) {
    opts_.keep_trajectory = false;
}

Measurement SimOracle::perturb(Measurement m, const Vec2& x, const Vec2& y) const {
    if (noise_ == 0.0) return m;
    uint64_t h = seed_;
    for (double v : {x.x1, x.x2, y.x1, y.x2}) h = splitmix64(h ^ hash_double(v));
    m.tau_plus = std::max(0.0, m.tau_plus + noise_ * unit_noise(h ^ 1));
    m.exit_point.x1 += noise_ * unit_noise(h ^ 2);
    m.exit_point.x2 += noise_ * unit_noise(h ^ 3);
    if (m.companion) {
        m.companion->x1 += noise_ * unit_noise(h ^ 4);
        m.companion->x2 += noise_ * unit_noise(h ^ 5);
    }
    return m;
}

Measurement SimOracle::measure(const Vec2& x, const Vec2& y) const {
    ++calls_;
    return perturb(exit_measurement(x, y, Q_, domain_, opts_), x, y);
}

Measurement SimOracle::measure_tangency(const Vec2& x, const Vec2& y) const {
    ++calls_;
    ExitOptions o = opts_;
    o.graze_tol = std::min(o.graze_tol, 1e-14);
    return perturb(exit_measurement(x, y, Q_, domain_, o), x, y);
}

Vec2 xi_for_velocity(const Vec2& p, const Vec2& v, const Vec2& gradQ_p) {
    const Vec2 gp = perp(gradQ_p); // grad_perp Q(p) = perp(grad Q(p))
    const Vec2 w = v - gp;
    const double w2 = norm2(w);
    if (w2 < 1e-24)
        throw DegenerateVelocity("requested velocity equals the potential drift");
    return p + perp(w) / (M_PI * w2);
}

Vec2 TangentFamily::launch_velocity_world(double t) const {
    const double a = alpha_sign * std::sqrt(std::max(0.0, 1.0 - beta * beta * t * t));
    return frame.from_frame_vec(Vec2{epsilon * a, epsilon * beta * t});
}

Vec2 TangentFamily::xi(double t) const {
    if (exact) return xi_for_velocity(p, launch_velocity_world(t), gradQ_p);
    const double psi = psi_star + rot_dir * t;
    return p + rho * Vec2{std::cos(psi), std::sin(psi)};
}

TangentFamily find_tangent_xi_from_data(const ConvexDomain& domain, double theta_p,
                                        const MeasureOracle& oracle,
                                        const TangencySearchOptions& opts) {
    const NormalChart chart(domain, theta_p);
    const Vec2 p = chart.base_point();
    const double rho =
        opts.rho > 0 ? opts.rho : std::max(3.0 * opts.margin, 0.12 * domain.diameter());

    auto candidate = [&](double psi) {
        return p + rho * Vec2{std::cos(psi), std::sin(psi)};
    };
    auto admissible = [&](double psi) {
        return !inside_tilde(domain, candidate(psi), opts.margin * (1.0 + 1e-9));
    };
    auto enters = [&](double psi) {
        return oracle.measure_tangency(p, candidate(psi)).tau_plus > 0.0;
    };

    // Scan for entering/non-entering transitions between adjacent admissible
    // candidates over the requested arc (wrapping only for a full circle).
    const int n = opts.scan_nodes;
    const bool full_circle = (opts.psi_hi - opts.psi_lo) >= 2.0 * M_PI - 1e-12;
    const double span = opts.psi_hi - opts.psi_lo;
    auto node_psi = [&](int i) {
        return full_circle ? opts.psi_lo + span * i / n
                           : opts.psi_lo + span * i / (n - 1);
    };
    std::vector<int> cls(n, -1); // -1 inadmissible, 0 leaves, 1 enters
    for (int i = 0; i < n; ++i) {
        const double psi = node_psi(i);
        if (!admissible(psi)) continue;
        cls[i] = enters(psi) ? 1 : 0;
    }

    struct Transition {
        double psi_enter, psi_leave;
    };
    std::vector<Transition> transitions;
    const int pairs = full_circle ? n : n - 1;
    for (int i = 0; i < pairs; ++i) {
        const int j = (i + 1) % n;
        if (cls[i] < 0 || cls[j] < 0 || cls[i] == cls[j]) continue;
        const double psi_i = node_psi(i);
        const double psi_j = full_circle && j == 0 ? opts.psi_lo + span : node_psi(j);
        if (cls[i] == 1)
            transitions.push_back({psi_i, psi_j});
        else
            transitions.push_back({psi_j, psi_i});
    }
    if (transitions.empty())
        throw NoTransitionFound("no entering/leaving transition along the candidate arc");

    TangentFamily fam;
    fam.p = p;
    fam.theta_p = theta_p;
    fam.frame = chart.frame();
    fam.alpha_sign = opts.alpha_sign;
    fam.exact = false;
    fam.rho = rho;
    fam.delta = opts.delta;

    for (const auto& tr : transitions) {
        double a = tr.psi_enter, b = tr.psi_leave;
        for (int it = 0; it < 80 && std::abs(b - a) > opts.angular_tol; ++it) {
            const double mid = 0.5 * (a + b);
            if (enters(mid))
                a = mid;
            else
                b = mid;
        }
        const double psi_star = 0.5 * (a + b);
        const double rot_dir = (tr.psi_enter > tr.psi_leave) ? 1.0 : -1.0;
        // Classify the travel direction along the boundary from a slightly
        // entering probe: the sign of the exit point's arclength coordinate.
        const Measurement probe = oracle.measure_tangency(
            p, p + rho * Vec2{std::cos(psi_star + rot_dir * opts.probe_offset),
                              std::sin(psi_star + rot_dir * opts.probe_offset)});
        if (probe.tau_plus <= 0.0) continue;
        const double z1 = chart.to_normal_coords(probe.exit_point).z1;
        const int alpha_observed = (z1 >= 0) ? +1 : -1;
        if (alpha_observed != opts.alpha_sign) continue;
        fam.psi_star = psi_star;
        fam.rot_dir = rot_dir;
        return fam;
    }
    throw NoTransitionFound("no transition with the requested travel direction");
}

TangentFamily build_family(const ConvexDomain& domain, double theta_p,
                           const Vec2& gradQ_p, double epsilon, double beta,
                           double delta, int alpha_sign, double margin) {
    if (epsilon <= 0 || beta <= 0) throw Error("family needs epsilon > 0 and beta > 0");
    if (beta * delta >= 1) throw Error("family needs beta * delta < 1");
    const NormalChart chart(domain, theta_p);
    TangentFamily fam;
    fam.p = chart.base_point();
    fam.theta_p = theta_p;
    fam.frame = chart.frame();
    fam.exact = true;
    fam.epsilon = epsilon;
    fam.beta = beta;
    fam.delta = delta;
    fam.alpha_sign = alpha_sign;
    fam.gradQ_p = gradQ_p;
    for (int i = 0; i <= 32; ++i) {
        const Vec2 xi = fam.xi(delta * i / 32.0);
        if (inside_tilde(domain, xi, margin * (1.0 + 1e-9)))
            throw XiInsideTildeOmega("companion start enters the enlarged domain");
    }
    return fam;
}

double check_convexity(const ConvexDomain& domain, double theta_p,
                       const Potential& Q, const ConvexityOptions& opts) {
    const Vec2 p = domain.gamma(theta_p);
    const Vec2 v = opts.epsilon * domain.unit_tangent(theta_p);
    const Vec2 xi = xi_for_velocity(p, v, Q.grad(p));
    IntegrateOptions io;
    io.tol = opts.ode_tol;

    auto second_deriv = [&](double h) {
        const auto traj = integrate_dipole({p, xi}, Q, 5.0 * h, io);
        // One-sided second derivative of the signed distance, using sd(0) = 0.
        std::vector<double> nodes{0.0, h, 2 * h, 3 * h, 4 * h};
        std::vector<double> vals{0.0};
        for (int i = 1; i <= 4; ++i)
            vals.push_back(domain.nearest_boundary(traj.at(i * h).plus).signed_distance);
        const auto w = fornberg_weights(0.0, nodes, 2);
        double d2 = 0;
        for (size_t j = 0; j < nodes.size(); ++j) d2 += w[2][j] * vals[j];
        return d2;
    };
    // Richardson with halved scale (3rd-order one-sided stencils).
    const double d_h = second_deriv(opts.h);
    const double d_h2 = second_deriv(opts.h / 2);
    return d_h2 + (d_h2 - d_h) / (std::pow(2.0, 3) - 1.0);
}

DerivEstimate estimate_ell_prime(const TangentFamily& family,
                                 const MeasureOracle& oracle,
                                 const EllPrimeOptions& opts) {
    std::vector<double> ts = opts.ts;
    if (ts.empty()) ts = geometric_grid(1e-4, 1e-1, 12);
    std::vector<double> grid{0.0}, ell{0.0};
    for (double t : ts) {
        grid.push_back(t);
        ell.push_back(oracle.measure(family.p, family.xi(t)).tau_plus);
    }
    const auto est = deriv_at_zero(grid, ell, 1, opts.stencil_order, opts.richardson_levels);
    if (!(est.value > 0.0))
        throw NonpositiveSlope("exit-time slope at t = 0 is not positive");
    return est;
}

} // namespace vortexjet
