#include "vortexjet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace vortexjet {

Vec2 interaction_velocity(const Vec2& d) {
    return perp(d) / (M_PI * norm2(d));
}

std::pair<Vec2, Vec2> dipole_rhs(const DipoleState& state, const Potential& Q,
                                 double d_min) {
    const Vec2 d = state.plus - state.minus;
    if (norm(d) < d_min) throw Collision("vortex separation below collision floor");
    const Vec2 w = interaction_velocity(d);
    return {w + Q.grad_perp(state.plus), w - Q.grad_perp(state.minus)};
}

std::vector<double> Trajectory::sample_times() const {
    std::vector<double> ts;
    ts.reserve(sol_.steps.size() + 1);
    for (const auto& st : sol_.steps) ts.push_back(st.s0);
    ts.push_back(sol_.s_end);
    return ts;
}

namespace {

struct DipoleField {
    const Potential* Q;
    double d_min;

    State<4> operator()(double, const State<4>& y) const {
        const DipoleState st = unpack(y);
        const auto [vp, vm] = dipole_rhs(st, *Q, d_min);
        return make_vec4(vp, vm);
    }
};

// Signed distance to the boundary with a warm-started Newton foot point;
// falls back to the global scan when the local iteration leaves its basin.
class BoundaryTracker {
public:
    explicit BoundaryTracker(const ConvexDomain& dom) : dom_(&dom) {}

    double signed_distance(const Vec2& x) {
        if (!init_) {
            const auto pr = dom_->nearest_boundary(x);
            theta_ = pr.theta;
            init_ = true;
            return pr.signed_distance;
        }
        double theta = theta_;
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
            const Vec2 diff = x - dom_->gamma(theta);
            const Vec2 g1 = dom_->dgamma(theta), g2 = dom_->d2gamma(theta);
            const double g = dot(diff, g1);
            const double dg = -norm2(g1) + dot(diff, g2);
            if (dg == 0.0) break;
            const double step = -g / dg;
            if (std::abs(step) > 0.5) break; // left the local basin
            theta += step;
            if (std::abs(step) < 1e-13) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            const auto pr = dom_->nearest_boundary(x);
            theta_ = pr.theta;
            return pr.signed_distance;
        }
        theta_ = theta;
        const double dist = norm(x - dom_->gamma(theta));
        return dom_->inside(x) ? dist : -dist;
    }

private:
    const ConvexDomain* dom_;
    double theta_ = 0;
    bool init_ = false;
};

} // namespace

Trajectory integrate_dipole(const DipoleState& state0, const Potential& Q,
                            double s_end, const IntegrateOptions& opts) {
    if (opts.tol < 1e-13 || opts.tol > 1e-6)
        throw Error("integration tolerance must lie in [1e-13, 1e-6]");
    if (norm(state0.plus - state0.minus) < opts.d_min)
        throw Collision("initial vortex separation below collision floor");
    const DipoleField field{&Q, opts.d_min};
    return Trajectory(integrate_adaptive<4>(field, pack(state0), 0.0, s_end,
                                            opts.tol, opts.max_step));
}

ExitResult exit_measurement_full(const Vec2& x, const Vec2& y, const Potential& Q,
                                 const ConvexDomain& domain, const ExitOptions& opts) {
    if (norm(x - y) == 0.0) throw Error("launch positions must differ");
    if (domain.inside(y)) throw Error("companion launch position must lie outside the domain");

    const double diam = domain.diameter();
    const double d_min = opts.d_min > 0 ? opts.d_min : 1e-4 * diam;
    const double free_speed = 1.0 / (M_PI * norm(x - y));
    const double s_max = opts.s_max > 0 ? opts.s_max : 10.0 * diam / free_speed;
    if (opts.tol < 1e-13 || opts.tol > 1e-6)
        throw Error("integration tolerance must lie in [1e-13, 1e-6]");

    BoundaryTracker tracker(domain);
    const double sd0 = tracker.signed_distance(x);
    const double boundary_tol = 1e-9 * std::max(1.0, diam);
    if (sd0 < -boundary_tol) {
        // Launch already strictly outside: exits at time zero by convention.
        Measurement m;
        m.tau_plus = 0;
        m.exit_point = x;
        if (!domain.inside(y)) m.companion = y;
        return {m, Trajectory{}};
    }

    const DipoleField field{&Q, d_min};

    // Event scan state shared with the step callback. Samples are processed
    // in increasing s. Before entry, an interval whose endpoints are both at
    // or below the graze threshold may still hide a shallow excursion; the
    // parabola bound max(sd) + C (ds)^2 decides whether to subdivide. After
    // entry only the (transversal) downcrossing matters, so coarse samples
    // suffice under strict convexity w.r.t. Q.
    bool entered = false;
    bool bracketed = false;
    bool receding = false;
    double bracket_lo = 0, bracket_hi = 0;
    double prev_s = 0, prev_sd = sd0;
    // Once a+ is strictly outside without ever having entered, the first
    // exit time is zero by definition; -exit_band adds hysteresis against
    // signed-distance evaluation noise.
    const double exit_band = std::max(10.0 * opts.graze_tol, 1e-12);
    const double v0 = 1.0 / (M_PI * norm(x - y)) + opts.drift_bound;
    const double kappa_max = 1.0 / domain.min_curvature_radius();
    const double accel_bound = kappa_max * v0 * v0 + opts.event_accel_margin * (1.0 + v0 * v0);
    const double s_floor = 1e-13 * s_max;
    constexpr int kDenseSamples = 32;
    const double max_step = s_max / 64.0;

    const DenseStep<4>* cur_step = nullptr;
    std::function<void(double, double, double, double, int)> scan =
        [&](double s_a, double sd_a, double s_b, double sd_b, int depth) {
            if (bracketed || receding) return;
            const double ds = s_b - s_a;
            const bool may_hide = !entered && sd_a <= opts.graze_tol &&
                                  sd_b <= opts.graze_tol &&
                                  std::max(sd_a, sd_b) + accel_bound * ds * ds >
                                      opts.graze_tol;
            if (depth < 48 && ds > s_floor && may_hide) {
                const double s_m = 0.5 * (s_a + s_b);
                const double sd_m = tracker.signed_distance(head2(cur_step->eval(s_m)));
                scan(s_a, sd_a, s_m, sd_m, depth + 1);
                scan(s_m, sd_m, s_b, sd_b, depth + 1);
                return;
            }
            if (!entered && sd_b > opts.graze_tol) entered = true;
            if (entered && sd_a >= 0.0 && sd_b < 0.0) {
                bracket_lo = s_a;
                bracket_hi = s_b;
                bracketed = true;
                return;
            }
            prev_s = s_b;
            prev_sd = sd_b;
        };

    auto on_step = [&](const DenseStep<4>& st, const State<4>&, double) {
        cur_step = &st;
        for (int i = 1; i <= kDenseSamples && !bracketed && !receding; ++i) {
            const double s = st.s0 + st.h * (double(i) / kDenseSamples);
            const double sd = tracker.signed_distance(head2(st.eval(s)));
            scan(prev_s, prev_sd, s, sd, 0);
            if (!entered && prev_sd < -exit_band) receding = true;
        }
        return !(bracketed || receding);
    };

    auto sol = integrate_adaptive<4>(field, pack(DipoleState{x, y}), 0.0, s_max,
                                     opts.tol, max_step, on_step);
    Trajectory traj(std::move(sol));

    Measurement m;
    if (!bracketed) {
        if (entered) throw Trapped("a+ did not exit the domain before s_max");
        // Tangent or outward launch: never rose above the graze threshold.
        m.tau_plus = 0;
        m.exit_point = x;
        if (!domain.inside(y)) m.companion = y;
        return {m, opts.keep_trajectory ? std::move(traj) : Trajectory{}};
    }

    // Refine the crossing: bisection, then a secant polish.
    auto sd_at = [&](double s) { return tracker.signed_distance(traj.at(s).plus); };
    double lo = bracket_lo, hi = bracket_hi;
    double flo = sd_at(lo);
    for (int it = 0; it < 80 && (hi - lo) > opts.time_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = sd_at(mid);
        if ((flo >= 0.0) == (fm >= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    double tau = 0.5 * (lo + hi);
    {
        double s1 = lo, s2 = hi;
        double f1 = sd_at(s1), f2 = sd_at(s2);
        for (int it = 0; it < 8 && f2 != f1; ++it) {
            const double s3 = s2 - f2 * (s2 - s1) / (f2 - f1);
            if (!(s3 >= bracket_lo && s3 <= bracket_hi)) break;
            s1 = s2;
            f1 = f2;
            s2 = s3;
            f2 = sd_at(s2);
            if (std::abs(s2 - s1) < 0.25 * opts.time_tol) break;
        }
        if (s2 >= bracket_lo && s2 <= bracket_hi) tau = s2;
    }

    const DipoleState exit_state = traj.at(tau);
    m.tau_plus = tau;
    m.exit_point = exit_state.plus;
    if (!domain.inside(exit_state.minus)) m.companion = exit_state.minus;
    return {m, opts.keep_trajectory ? std::move(traj) : Trajectory{}};
}

} // namespace vortexjet
