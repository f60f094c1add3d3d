// Adaptive Gauss-Legendre quadrature with interval bisection. Nodes and
// weights are computed at startup by Newton iteration on the Legendre
// polynomials; the error estimate on an interval compares the parent rule
// against the sum over its two halves.
#ifndef VORTEXJET_QUADRATURE_HPP
#define VORTEXJET_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "vortexjet/errors.hpp"

namespace vortexjet {

// Gauss-Legendre nodes/weights on [-1, 1].
inline const std::pair<std::vector<double>, std::vector<double>>&
gauss_legendre(int n) {
    static std::vector<std::pair<std::vector<double>, std::vector<double>>> cache(64);
    auto& entry = cache.at(static_cast<size_t>(n));
    if (entry.first.empty()) {
        std::vector<double> x(n), w(n);
        for (int i = 0; i < n; ++i) {
            // Chebyshev-based initial guess, then Newton on P_n.
            double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (t * p1 - p0) / (t * t - 1.0);
                const double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-16) break;
            }
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (t * p1 - p0) / (t * t - 1.0);
            x[i] = t;
            w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        entry = {std::move(x), std::move(w)};
    }
    return entry;
}

namespace detail {

template <typename T, typename F>
T gauss_panel(const F& f, double a, double b, int n) {
    const auto& [x, w] = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    T sum = w[0] * f(mid + half * x[0]);
    for (int i = 1; i < n; ++i) sum = sum + w[i] * f(mid + half * x[i]);
    return half * sum;
}

} // namespace detail

// Integrate f over [a, b] to absolute tolerance tol. T needs operator+,
// scalar multiplication, and a max_abs_norm via the provided norm functor.
template <typename T, typename F, typename NormFn>
T adaptive_integrate(const F& f, double a, double b, double tol, NormFn norm,
                     int n = 15, int max_depth = 40) {
    struct Item {
        double a, b;
        T coarse;
        int depth;
    };
    if (a == b) return 0.0 * detail::gauss_panel<T>(f, 0.0, 1.0, n);
    std::vector<Item> stack;
    stack.push_back({a, b, detail::gauss_panel<T>(f, a, b, n), 0});
    T total = 0.0 * stack.back().coarse;
    bool first = true;
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (it.a + it.b);
        const T left = detail::gauss_panel<T>(f, it.a, mid, n);
        const T right = detail::gauss_panel<T>(f, mid, it.b, n);
        const T fine = left + right;
        const double err = norm(fine + (-1.0) * it.coarse);
        if (err < tol || it.depth >= max_depth) {
            if (first) {
                total = fine;
                first = false;
            } else {
                total = total + fine;
            }
        } else {
            stack.push_back({it.a, mid, left, it.depth + 1});
            stack.push_back({mid, it.b, right, it.depth + 1});
        }
    }
    return total;
}

inline double adaptive_integrate_scalar(const std::function<double(double)>& f,
                                        double a, double b, double tol) {
    return adaptive_integrate<double>(f, a, b, tol,
                                      [](double x) { return std::abs(x); });
}

} // namespace vortexjet

#endif
