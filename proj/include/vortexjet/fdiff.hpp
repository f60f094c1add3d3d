// Numerical differentiation of grid functions sampled on one-sided
// (geometric) parameter grids: Fornberg weights on arbitrary nodes,
// one-sided stencil estimates with Richardson extrapolation across scales,
// and a global polynomial-fit differentiator for higher derivatives.
#ifndef VORTEXJET_FDIFF_HPP
#define VORTEXJET_FDIFF_HPP

#include <vector>

#include "vortexjet/errors.hpp"

namespace vortexjet {

// Weights for the m-th derivative at z from the given nodes (Fornberg's
// recursion). Returns a (m+1) x n table: row k holds the k-th derivative
// weights.
std::vector<std::vector<double>> fornberg_weights(double z,
                                                  const std::vector<double>& nodes,
                                                  int max_order);

struct DerivEstimate {
    double value = 0;
    double uncertainty = 0;           // spread across Richardson levels
    std::vector<double> level_values; // per-level extrapolants (diagnostics)
};

// One-sided estimate of f^(order)(0) from samples f(ts[i]); ts ascending and
// positive (a known f(0) sample may be passed as ts[0] = 0). Uses consecutive
// node windows of size order + stencil_order as Richardson levels.
DerivEstimate deriv_at_zero(const std::vector<double>& ts,
                            const std::vector<double>& fs, int order,
                            int stencil_order = 4, int levels = 3);

// Least-squares polynomial fit on a scaled basis; derivatives of the fit are
// analytic, which keeps node-interior derivatives of smooth grid functions
// stable on geometric grids.
class PolyFit {
public:
    PolyFit() = default;
    PolyFit(const std::vector<double>& ts, const std::vector<double>& fs, int degree);

    double eval(double t) const { return deriv(t, 0); }
    double deriv(double t, int order) const;
    double deriv_at_zero(int order) const;
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

private:
    double t_scale_ = 1.0;
    std::vector<double> coeffs_; // in powers of t / t_scale
};

// Fit-based derivative at zero with an uncertainty from refit variants
// (degree +/- 1, dropping edge nodes).
DerivEstimate fit_deriv_at_zero(const std::vector<double>& ts,
                                const std::vector<double>& fs, int order,
                                int degree);

std::vector<double> geometric_grid(double t_min, double t_max, int n);

} // namespace vortexjet

#endif
