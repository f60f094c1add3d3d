#include "vortexjet/fdiff.hpp"

#include <algorithm>
#include <cmath>

namespace vortexjet {

std::vector<std::vector<double>> fornberg_weights(double z,
                                                  const std::vector<double>& nodes,
                                                  int max_order) {
    const int n = static_cast<int>(nodes.size());
    const int m = max_order;
    if (n < m + 1) throw Error("fornberg_weights: not enough nodes for the order");
    // c[j][k]: weight of node j for the k-th derivative.
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = nodes[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<std::vector<double>> rows(m + 1, std::vector<double>(n, 0.0));
    for (int k = 0; k <= m; ++k)
        for (int j = 0; j < n; ++j) rows[k][j] = c[j][k];
    return rows;
}

DerivEstimate deriv_at_zero(const std::vector<double>& ts,
                            const std::vector<double>& fs, int order,
                            int stencil_order, int levels) {
    const int n = static_cast<int>(ts.size());
    if (n != static_cast<int>(fs.size())) throw Error("deriv_at_zero: size mismatch");
    const int m = order + stencil_order; // window size
    if (n < m + 1) throw Error("deriv_at_zero: not enough samples");
    const int max_levels = n - m + 1;
    const int L = std::min(levels + 1, max_levels);

    // Window i holds m consecutive nodes ending at index n-1-i, so the
    // stencil scale shrinks by the grid ratio from one level to the next.
    std::vector<double> D(L), H(L);
    for (int i = 0; i < L; ++i) {
        const int hi = n - 1 - i;
        const int lo = hi - m + 1;
        std::vector<double> w_nodes(ts.begin() + lo, ts.begin() + hi + 1);
        std::vector<double> w_vals(fs.begin() + lo, fs.begin() + hi + 1);
        const auto w = fornberg_weights(0.0, w_nodes, order);
        double d = 0;
        for (size_t j = 0; j < w_nodes.size(); ++j) d += w[order][j] * w_vals[j];
        D[i] = d;
        H[i] = w_nodes.back();
    }

    DerivEstimate out;
    if (L == 1) {
        out.value = D[0];
        out.uncertainty = std::abs(D[0]) * 1e-2;
        out.level_values = D;
        return out;
    }
    // Richardson across adjacent scales assuming error ~ C h^q.
    const int q = stencil_order;
    std::vector<double> E(L - 1);
    for (int i = 0; i + 1 < L; ++i) {
        const double r = H[i] / H[i + 1];
        E[i] = D[i + 1] + (D[i + 1] - D[i]) / (std::pow(r, q) - 1.0);
    }
    out.level_values = E;
    if (E.size() == 1) {
        out.value = E[0];
        out.uncertainty = std::abs(E[0] - D[L - 1]);
        return out;
    }
    // Pick the extrapolant pair that agrees best; spread is the uncertainty.
    size_t best = 0;
    double best_spread = std::abs(E[1] - E[0]);
    for (size_t i = 1; i + 1 < E.size(); ++i) {
        const double spread = std::abs(E[i + 1] - E[i]);
        if (spread < best_spread) {
            best_spread = spread;
            best = i;
        }
    }
    out.value = E[best + 1];
    out.uncertainty = best_spread;
    return out;
}

PolyFit::PolyFit(const std::vector<double>& ts, const std::vector<double>& fs,
                 int degree) {
    const int n = static_cast<int>(ts.size());
    if (n != static_cast<int>(fs.size())) throw Error("PolyFit: size mismatch");
    if (n < degree + 1) throw Error("PolyFit: not enough samples for the degree");
    t_scale_ = 0.0;
    for (double t : ts) t_scale_ = std::max(t_scale_, std::abs(t));
    if (t_scale_ == 0.0) t_scale_ = 1.0;

    // Householder QR on the scaled Vandermonde matrix.
    const int m = degree + 1;
    std::vector<std::vector<double>> A(n, std::vector<double>(m));
    std::vector<double> b(fs);
    for (int i = 0; i < n; ++i) {
        const double tau = ts[i] / t_scale_;
        double p = 1.0;
        for (int j = 0; j < m; ++j) {
            A[i][j] = p;
            p *= tau;
        }
    }
    for (int j = 0; j < m; ++j) {
        double nrm = 0;
        for (int i = j; i < n; ++i) nrm += A[i][j] * A[i][j];
        nrm = std::sqrt(nrm);
        if (nrm == 0) throw Error("PolyFit: rank-deficient system");
        if (A[j][j] < 0) nrm = -nrm;
        std::vector<double> v(n, 0.0);
        for (int i = j; i < n; ++i) v[i] = A[i][j];
        v[j] += nrm;
        double vtv = 0;
        for (int i = j; i < n; ++i) vtv += v[i] * v[i];
        if (vtv == 0) continue;
        for (int col = j; col < m; ++col) {
            double dot = 0;
            for (int i = j; i < n; ++i) dot += v[i] * A[i][col];
            const double f = 2.0 * dot / vtv;
            for (int i = j; i < n; ++i) A[i][col] -= f * v[i];
        }
        double dotb = 0;
        for (int i = j; i < n; ++i) dotb += v[i] * b[i];
        const double fb = 2.0 * dotb / vtv;
        for (int i = j; i < n; ++i) b[i] -= fb * v[i];
    }
    coeffs_.assign(m, 0.0);
    for (int j = m - 1; j >= 0; --j) {
        double s = b[j];
        for (int k = j + 1; k < m; ++k) s -= A[j][k] * coeffs_[k];
        coeffs_[j] = s / A[j][j];
    }
}

double PolyFit::deriv(double t, int order) const {
    const double tau = t / t_scale_;
    const int m = static_cast<int>(coeffs_.size());
    double total = 0.0;
    for (int k = order; k < m; ++k) {
        double f = 1.0;
        for (int i = 0; i < order; ++i) f *= (k - i);
        total += coeffs_[k] * f * std::pow(tau, k - order);
    }
    return total / std::pow(t_scale_, order);
}

double PolyFit::deriv_at_zero(int order) const {
    const int m = static_cast<int>(coeffs_.size());
    if (order >= m) return 0.0;
    double f = 1.0;
    for (int i = 2; i <= order; ++i) f *= i;
    return coeffs_[order] * f / std::pow(t_scale_, order);
}

DerivEstimate fit_deriv_at_zero(const std::vector<double>& ts,
                                const std::vector<double>& fs, int order,
                                int degree) {
    DerivEstimate out;
    const PolyFit base(ts, fs, degree);
    out.value = base.deriv_at_zero(order);
    out.level_values.push_back(out.value);

    std::vector<double> variants;
    if (static_cast<int>(ts.size()) >= degree + 1 && degree - 1 >= order)
        variants.push_back(PolyFit(ts, fs, degree - 1).deriv_at_zero(order));
    if (static_cast<int>(ts.size()) - 1 >= degree + 1) {
        std::vector<double> t2(ts.begin(), ts.end() - 1), f2(fs.begin(), fs.end() - 1);
        variants.push_back(PolyFit(t2, f2, degree).deriv_at_zero(order));
    }
    if (static_cast<int>(ts.size()) - 2 >= degree + 1) {
        std::vector<double> t2(ts.begin(), ts.end() - 2), f2(fs.begin(), fs.end() - 2);
        variants.push_back(PolyFit(t2, f2, degree).deriv_at_zero(order));
    }
    double unc = 0;
    for (double v : variants) {
        unc = std::max(unc, std::abs(v - out.value));
        out.level_values.push_back(v);
    }
    out.uncertainty = unc;
    return out;
}

std::vector<double> geometric_grid(double t_min, double t_max, int n) {
    if (n < 2 || t_min <= 0 || t_max <= t_min)
        throw Error("geometric_grid: invalid parameters");
    std::vector<double> ts(n);
    const double ratio = std::pow(t_max / t_min, 1.0 / (n - 1));
    double t = t_min;
    for (int i = 0; i < n; ++i) {
        ts[i] = t;
        t *= ratio;
    }
    ts.back() = t_max;
    return ts;
}

} // namespace vortexjet
