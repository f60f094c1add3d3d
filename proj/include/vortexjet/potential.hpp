// Background potentials with exact analytic partial derivatives: zero,
// polynomial, isotropic Gaussian bumps, and sums of these.
#ifndef VORTEXJET_POTENTIAL_HPP
#define VORTEXJET_POTENTIAL_HPP

#include <map>
#include <utility>
#include <vector>

#include "vortexjet/domain.hpp"
#include "vortexjet/errors.hpp"
#include "vortexjet/jet.hpp"
#include "vortexjet/vec.hpp"

namespace vortexjet {

struct GaussianBump {
    Vec2 center;
    double amplitude;
    double width; // A exp(-|x-c|^2 / (2 width^2))
};

enum class PotentialKind { zero, polynomial, gaussian_bumps, sum };

class Potential {
public:
    // (j, k) -> coefficient of x1^j x2^k
    using PolyCoeffs = std::map<std::pair<int, int>, double>;

    Potential() = default; // zero potential

    static Potential zero();
    static Potential polynomial(PolyCoeffs coeffs);
    static Potential gaussian_bumps(std::vector<GaussianBump> bumps);
    static Potential sum(std::vector<Potential> parts);

    PotentialKind kind() const { return kind_; }
    int max_exact_order() const { return max_order_; }

    // All partials d1^j d2^k Q(x), j + k <= order; entry (0,0) is Q(x).
    DerivTable eval_partials(const Vec2& x, int order) const;

    double eval(const Vec2& x) const { return eval_partials(x, 0).value(); }
    Vec2 grad(const Vec2& x) const { return eval_partials(x, 1).grad(); }
    Vec2 grad_perp(const Vec2& x) const { return eval_partials(x, 1).grad_perp(); }

    const PolyCoeffs& poly_coeffs() const { return poly_; }
    const std::vector<GaussianBump>& bumps() const { return bumps_; }
    const std::vector<Potential>& parts() const { return parts_; }

private:
    PotentialKind kind_ = PotentialKind::zero;
    int max_order_ = 1 << 20;
    PolyCoeffs poly_;
    std::vector<GaussianBump> bumps_;
    std::vector<Potential> parts_;
};

// Conservative sup of |grad Q| over the boundary: max over n_samples >= 64
// uniform boundary samples, inflated by 10% to stay valid between samples.
double gradient_bound(const Potential& Q, const ConvexDomain& domain, int n_samples = 256);

} // namespace vortexjet

#endif
