#include "vortexjet/potential.hpp"

#include <algorithm>
#include <cmath>

namespace vortexjet {

namespace {

constexpr int kGaussianMaxOrder = 8;

// Dense polynomial in two local variables, used for the Gaussian derivative
// recursion: d1 (P * G) = (dP/du - u/w^2 * P) * G.
struct Poly2 {
    int deg;
    std::vector<double> c; // c[a * (deg+1) + b] multiplies u^a v^b

    explicit Poly2(int d) : deg(d), c((d + 1) * (d + 1), 0.0) {}
    double& at(int a, int b) { return c[a * (deg + 1) + b]; }
    double get(int a, int b) const {
        if (a < 0 || b < 0 || a > deg || b > deg) return 0.0;
        return c[a * (deg + 1) + b];
    }

    Poly2 diff_shift(bool first_var, double inv_w2) const {
        // Returns dP/d(var) - var * inv_w2 * P.
        Poly2 r(deg);
        for (int a = 0; a <= deg; ++a) {
            for (int b = 0; b <= deg; ++b) {
                double v = 0.0;
                if (first_var) {
                    v = (a + 1) * get(a + 1, b) - inv_w2 * get(a - 1, b);
                } else {
                    v = (b + 1) * get(a, b + 1) - inv_w2 * get(a, b - 1);
                }
                r.at(a, b) = v;
            }
        }
        return r;
    }

    double eval(double u, double v) const {
        double total = 0.0;
        double up = 1.0;
        for (int a = 0; a <= deg; ++a) {
            double vp = 1.0;
            for (int b = 0; b <= deg; ++b) {
                const double coef = get(a, b);
                if (coef != 0.0) total += coef * up * vp;
                vp *= v;
            }
            up *= u;
        }
        return total;
    }
};

double falling(int n, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= (n - i);
    return r;
}

void add_gaussian_partials(const GaussianBump& g, const Vec2& x, int order,
                           DerivTable& out) {
    const double u = x.x1 - g.center.x1;
    const double v = x.x2 - g.center.x2;
    const double inv_w2 = 1.0 / (g.width * g.width);
    const double G = g.amplitude * std::exp(-0.5 * (u * u + v * v) * inv_w2);

    // prefix[j][k] holds the polynomial prefactor of d1^j d2^k G.
    std::vector<std::vector<Poly2>> prefix(order + 1);
    prefix[0].push_back(Poly2(order));
    prefix[0][0].at(0, 0) = 1.0;
    for (int n = 0; n <= order; ++n) {
        for (int k = 0; k <= n; ++k) {
            const int j = n - k;
            if (n > 0) {
                if (k == 0) {
                    prefix[n].push_back(prefix[n - 1][0].diff_shift(true, inv_w2));
                } else {
                    prefix[n].push_back(prefix[n - 1][k - 1].diff_shift(false, inv_w2));
                }
            }
            out.at(j, k) += prefix[n][k].eval(u, v) * G;
        }
    }
}

} // namespace

Potential Potential::zero() { return Potential(); }

Potential Potential::polynomial(PolyCoeffs coeffs) {
    Potential p;
    p.kind_ = PotentialKind::polynomial;
    p.poly_ = std::move(coeffs);
    return p;
}

Potential Potential::gaussian_bumps(std::vector<GaussianBump> bumps) {
    for (const auto& b : bumps)
        if (b.width <= 0) throw Error("gaussian bump width must be positive");
    Potential p;
    p.kind_ = PotentialKind::gaussian_bumps;
    p.bumps_ = std::move(bumps);
    p.max_order_ = kGaussianMaxOrder;
    return p;
}

Potential Potential::sum(std::vector<Potential> parts) {
    Potential p;
    p.kind_ = PotentialKind::sum;
    p.max_order_ = 1 << 20;
    for (const auto& q : parts) p.max_order_ = std::min(p.max_order_, q.max_order_);
    p.parts_ = std::move(parts);
    return p;
}

DerivTable Potential::eval_partials(const Vec2& x, int order) const {
    if (order < 0) throw Error("derivative order must be nonnegative");
    if (order > max_order_)
        throw OrderUnavailable("requested derivative order exceeds max_exact_order");
    DerivTable out(order);
    switch (kind_) {
    case PotentialKind::zero:
        break;
    case PotentialKind::polynomial:
        for (const auto& [jk, coef] : poly_) {
            const int a = jk.first, b = jk.second;
            for (int n = 0; n <= order; ++n) {
                for (int k = 0; k <= n; ++k) {
                    const int j = n - k;
                    if (j > a || k > b) continue;
                    out.at(j, k) += coef * falling(a, j) * falling(b, k) *
                                    std::pow(x.x1, a - j) * std::pow(x.x2, b - k);
                }
            }
        }
        break;
    case PotentialKind::gaussian_bumps:
        for (const auto& g : bumps_) add_gaussian_partials(g, x, order, out);
        break;
    case PotentialKind::sum:
        for (const auto& q : parts_) out += q.eval_partials(x, order);
        break;
    }
    return out;
}

double gradient_bound(const Potential& Q, const ConvexDomain& domain, int n_samples) {
    if (n_samples < 64) throw Error("gradient_bound needs at least 64 samples");
    double m = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double th = 2.0 * M_PI * i / n_samples;
        m = std::max(m, norm(Q.grad(domain.gamma(th))));
    }
    return 1.1 * m;
}

} // namespace vortexjet
