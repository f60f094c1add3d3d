// Adaptive Dormand-Prince 5(4) integration with the standard 4th-order
// continuous extension. Fixed-size state, FSAL, PI step control.
#ifndef VORTEXJET_ODE_HPP
#define VORTEXJET_ODE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "vortexjet/errors.hpp"

namespace vortexjet {

namespace dopri5 {

constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

} // namespace dopri5

template <int N>
using State = std::array<double, N>;

template <int N>
struct DenseStep {
    double s0 = 0, h = 0;
    std::array<State<N>, 5> rcont{};

    State<N> eval(double s) const {
        const double th = (s - s0) / h;
        const double th1 = 1.0 - th;
        State<N> y;
        for (int i = 0; i < N; ++i) {
            y[i] = rcont[0][i] +
                   th * (rcont[1][i] +
                         th1 * (rcont[2][i] +
                                th * (rcont[3][i] + th1 * rcont[4][i])));
        }
        return y;
    }
};

template <int N>
struct OdeSolution {
    double s_begin = 0, s_end = 0;
    std::vector<DenseStep<N>> steps;

    State<N> at(double s) const {
        if (steps.empty()) throw Error("empty ode solution");
        // Binary search over monotone step starts (direction-aware).
        const bool fwd = s_end >= s_begin;
        size_t lo = 0, hi = steps.size() - 1;
        while (lo < hi) {
            const size_t mid = (lo + hi + 1) / 2;
            const double start = steps[mid].s0;
            if (fwd ? (start <= s) : (start >= s))
                lo = mid;
            else
                hi = mid - 1;
        }
        return steps[lo].eval(s);
    }
};

// Integrates y' = rhs(s, y) from s0 to s1 (either direction). Local error per
// step is kept at or below tol (mixed absolute/relative). on_step is invoked
// after each accepted step with the new dense segment and may return false to
// stop early.
template <int N, typename RHS, typename OnStep>
OdeSolution<N> integrate_adaptive(const RHS& rhs, State<N> y, double s0,
                                  double s1, double tol, double max_step,
                                  const OnStep& on_step) {
    using namespace dopri5;
    constexpr double safe = 0.9, facl = 0.2, facr = 10.0, beta = 0.04;
    const double dir = (s1 >= s0) ? 1.0 : -1.0;

    OdeSolution<N> sol;
    sol.s_begin = s0;
    sol.s_end = s1;
    if (s0 == s1) {
        DenseStep<N> st;
        st.s0 = s0;
        st.h = 1.0;
        st.rcont[0] = y;
        sol.steps.push_back(st);
        return sol;
    }

    State<N> k1 = rhs(s0, y);

    // Initial step size from the magnitude of the field and its variation.
    double h;
    {
        double dnf = 0, dny = 0;
        for (int i = 0; i < N; ++i) {
            const double sc = tol + tol * std::abs(y[i]);
            dnf += (k1[i] / sc) * (k1[i] / sc);
            dny += (y[i] / sc) * (y[i] / sc);
        }
        h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
        h = std::min(h, std::abs(s1 - s0));
        State<N> y1;
        for (int i = 0; i < N; ++i) y1[i] = y[i] + dir * h * k1[i];
        const State<N> k2 = rhs(s0 + dir * h, y1);
        double der2 = 0;
        for (int i = 0; i < N; ++i) {
            const double sc = tol + tol * std::abs(y[i]);
            der2 += ((k2[i] - k1[i]) / sc) * ((k2[i] - k1[i]) / sc);
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(der2, std::sqrt(dnf));
        const double h1 =
            (der12 <= 1e-15) ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
        h = dir * std::min({100.0 * h, h1, max_step, std::abs(s1 - s0)});
    }

    double s = s0;
    double facold = 1e-4;
    bool reject = false;
    const double uround = std::numeric_limits<double>::epsilon();

    while (dir * (s1 - s) > 0) {
        if (0.1 * std::abs(h) <= std::abs(s) * uround)
            throw StepFailure("step size underflow in dopri5");
        bool last = false;
        if (dir * (s + 1.01 * h - s1) > 0) {
            h = s1 - s;
            last = true;
        }
        if (std::abs(h) > max_step) {
            h = dir * max_step;
            last = false;
        }

        State<N> yt;
        for (int i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
        const State<N> k2 = rhs(s + c2 * h, yt);
        for (int i = 0; i < N; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        const State<N> k3 = rhs(s + c3 * h, yt);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        const State<N> k4 = rhs(s + c4 * h, yt);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        const State<N> k5 = rhs(s + c5 * h, yt);
        for (int i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                a64 * k4[i] + a65 * k5[i]);
        const State<N> k6 = rhs(s + h, yt);
        State<N> ynew;
        for (int i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] +
                                  a75 * k5[i] + a76 * k6[i]);
        const State<N> k7 = rhs(s + h, ynew);

        double err = 0;
        for (int i = 0; i < N; ++i) {
            const double ee = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                   e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (ee / sc) * (ee / sc);
        }
        err = std::sqrt(err / N);

        const double fac11 = std::pow(err, 0.2 - beta * 0.75);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(1.0 / facr, std::min(1.0 / facl, fac / safe));
        double hnew = h / fac;

        if (err > 1.0) {
            h /= std::min(1.0 / facl, fac11 / safe);
            reject = true;
            continue;
        }

        facold = std::max(err, 1e-4);
        DenseStep<N> st;
        st.s0 = s;
        st.h = h;
        for (int i = 0; i < N; ++i) {
            const double dy = ynew[i] - y[i];
            st.rcont[0][i] = y[i];
            st.rcont[1][i] = dy;
            st.rcont[2][i] = h * k1[i] - dy;
            st.rcont[3][i] = dy - h * k7[i] - st.rcont[2][i];
            st.rcont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] +
                                  d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        sol.steps.push_back(st);
        y = ynew;
        s += h;
        k1 = k7;
        if (reject) {
            hnew = dir * std::min(std::abs(hnew), std::abs(h));
            reject = false;
        }
        h = hnew;
        if (!on_step(sol.steps.back(), y, s)) {
            sol.s_end = s;
            return sol;
        }
        if (last) break;
    }
    sol.s_end = s;
    return sol;
}

template <int N, typename RHS>
OdeSolution<N> integrate_adaptive(const RHS& rhs, const State<N>& y0, double s0,
                                  double s1, double tol,
                                  double max_step = std::numeric_limits<double>::infinity()) {
    return integrate_adaptive<N>(rhs, y0, s0, s1, tol, max_step,
                                 [](const DenseStep<N>&, const State<N>&, double) {
                                     return true;
                                 });
}

} // namespace vortexjet

#endif
