// Boundary-jet recovery from exit measurements: the gradient from the first
// t-derivative of the flow discrepancy R(t), the Hessian's normal column from
// the third, and the third-order normal derivative from the fifth, each after
// subtracting terms computable from measured data, previously recovered
// boundary fields, and the potential known outside the enlarged domain.
//
// The discrepancy R(t) = X(l(t), phi(t)) - X0(l(t), phi(t)) satisfies
//   R^(n) = sum_{k<n} d^{n-1-k}/dt^{n-1-k} [ l'(t) (d^k_t G)|_{s=l(t)} ] + int_0^l d^n_t G ds,
//   G(s,t) = g + (l(t) - s) M(d) g,   g = (grad_perp Q(a+), -grad_perp Q(a-)),
// where M(d) is the s-slope of the free-flow Jacobian. Every restricted
// derivative is assembled as a grid function of t from (l, c, b) measurements
// and their fitted derivatives; boundary jets at the exit points carry the
// recovered fields with the one per-order normal-power component (unknown at
// the current stage) zeroed, so the omitted part contributes exactly
// K! (l'(0))^{K+1} eps^K beta^K d2^K grad_perp Q(p), which is added back and
// solved for.
#ifndef VORTEXJET_RECOVER_HPP
#define VORTEXJET_RECOVER_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vortexjet/family.hpp"
#include "vortexjet/fdiff.hpp"
#include "vortexjet/jet.hpp"
#include "vortexjet/su.hpp"

namespace vortexjet {

// Q restricted to the complement of the enlarged domain; evaluation inside is
// a contract violation and throws.
class OutsidePotential {
public:
    OutsidePotential(Potential Q, ConvexDomain domain, double margin)
        : Q_(std::move(Q)), domain_(std::move(domain)), margin_(margin) {}

    DerivTable partials(const Vec2& x, int order) const {
        if (inside_tilde(domain_, x, margin_ * (1.0 - 1e-9)))
            throw Error("potential queried inside the enlarged domain");
        return Q_.eval_partials(x, order);
    }
    double value(const Vec2& x) const { return partials(x, 0).value(); }
    Vec2 grad(const Vec2& x) const { return partials(x, 1).grad(); }
    Vec2 grad_perp(const Vec2& x) const { return partials(x, 1).grad_perp(); }
    double margin() const { return margin_; }
    const ConvexDomain& domain() const { return domain_; }

private:
    Potential Q_;
    ConvexDomain domain_;
    double margin_;
};

struct RecoverOptions {
    double margin = 0.05; // enlargement margin
    double t_min = 1e-4, t_max = 1e-1;
    int t_nodes = 12;
    double epsilon = 1.0, beta = 1.0;
    int alpha_sign = +1;
    int stencil_order = 4;
    int richardson_levels = 3;
    int fit_degree = 7;
    double ill_threshold = 0.5; // uncertainty / |value| triggering IllConditioned
    int field_points = 9;
    double field_span = 0; // arclength half-span of field arcs; 0: auto
    TangencySearchOptions tangency;
    ExitOptions exit_opts;
};

struct GradientEstimate {
    Vec2 gradient;   // world coordinates
    Vec2 uncertainty;
    double ell_prime = 0;
    double ell_prime_unc = 0;
    double consistency = 0; // companion-side cross-check residual
    TangentFamily family;
};

// Stage-1 recovery at gamma(theta_p): data-driven tangent family, one-sided
// differentiation of R with Richardson extrapolation, division by l'(0).
GradientEstimate recover_gradient(const ConvexDomain& domain, double theta_p,
                                  const MeasureOracle& oracle,
                                  const OutsidePotential& outside,
                                  const RecoverOptions& opts);

// Same, but along a prescribed family (used for the stage-independence check).
GradientEstimate recover_gradient_with_family(const ConvexDomain& domain,
                                              const TangentFamily& family,
                                              const MeasureOracle& oracle,
                                              const OutsidePotential& outside,
                                              const RecoverOptions& opts);

struct BoundaryVectorField {
    double theta_center = 0;
    std::vector<double> sigmas; // arclength offsets from the center point
    std::vector<double> thetas;
    std::vector<Vec2> values; // world coordinates
    std::vector<Vec2> uncertainties;
    PolyFit fit1, fit2;

    Vec2 eval(double sigma) const { return {fit1.eval(sigma), fit2.eval(sigma)}; }
    Vec2 deriv(double sigma) const { return {fit1.deriv(sigma, 1), fit2.deriv(sigma, 1)}; }
    // Spread of the arc-derivative across refit variants (per world component).
    Vec2 deriv_uncertainty(double sigma) const;
    bool empty() const { return sigmas.empty(); }
};

struct BoundaryMatrixField {
    double theta_center = 0;
    std::vector<double> sigmas;
    std::vector<double> thetas;
    std::vector<Mat2> values; // world coordinates, symmetric
    PolyFit fit11, fit12, fit22;

    Mat2 eval(double sigma) const {
        const double h12 = fit12.eval(sigma);
        return {fit11.eval(sigma), h12, h12, fit22.eval(sigma)};
    }
    Mat2 deriv(double sigma) const {
        const double d12 = fit12.deriv(sigma, 1);
        return {fit11.deriv(sigma, 1), d12, d12, fit22.deriv(sigma, 1)};
    }
    bool empty() const { return sigmas.empty(); }
};

// Gradient recovery repeated along an arc of boundary points (arclength
// offsets around theta_center), with a polynomial fit per component.
BoundaryVectorField recover_gradient_field(const ConvexDomain& domain,
                                           double theta_center,
                                           const std::vector<double>& sigmas,
                                           const MeasureOracle& oracle,
                                           const OutsidePotential& outside,
                                           const RecoverOptions& opts);

struct HessianEstimate {
    Mat2 hessian_frame; // symmetrized, boundary frame at p
    Mat2 hessian_world;
    Mat2 uncertainty_frame;
    double asymmetry = 0; // |field-route H12 - extraction-route H21|
    double ell_prime = 0;
    GradientEstimate gradient; // stage-1 result at p
    BoundaryVectorField gradient_field;
};

HessianEstimate recover_hessian(const ConvexDomain& domain, double theta_p,
                                const MeasureOracle& oracle,
                                const OutsidePotential& outside,
                                const RecoverOptions& opts,
                                const BoundaryVectorField* shared_field = nullptr);

struct JetEstimate {
    Vec2 p;
    double theta_p = 0;
    Frame2 frame;
    int order = 1;
    // (j, k) -> d1^j d2^k Q(p) in the boundary frame, 1 <= j+k <= order.
    std::map<std::pair<int, int>, double> values;
    std::map<std::pair<int, int>, double> uncertainties;
    std::vector<std::string> failures; // entries reported ill-conditioned
    double ell_prime = 0;
    double gradient_consistency = 0;
};

JetEstimate recover_jet(const ConvexDomain& domain, double theta_p, int order,
                        const MeasureOracle& oracle, const OutsidePotential& outside,
                        const RecoverOptions& opts);

// ---------------------------------------------------------------------------
// Appendix-style limit checks (simulator side: full knowledge of Q).

struct LemmaCheckOptions {
    double t_min = 3e-3, t_max = 1e-1;
    int t_nodes = 10;
    double ode_tol = 1e-12;
    int fit_degree = 6;
    double fd_step = 0; // inner t-step for the partial derivatives; 0: auto
};

struct LemmaCheckResult {
    Vec2 numeric;    // measured limit (a+ block, frame coords)
    Vec2 prediction; // closed-form prediction (zero vector for eta = 0)
    double discrepancy; // relative to |prediction| (absolute when it vanishes)
};

// eta = 0 checks the vanishing a+ block of lim d^k_t (V - V0)|_{s=l(t)};
// eta = k checks the leading-coefficient formula (computable lower-order
// terms subtracted for k >= 2); 0 < eta < k checks that the limit depends
// only on the jet of Q at p through order eta + 1, by comparing against a
// second potential sharing that jet.
LemmaCheckResult lemma_limits_check(int k, int eta, const TangentFamily& family,
                                    const Potential& Q, const ConvexDomain& domain,
                                    const LemmaCheckOptions& opts = {});

// Taylor polynomial of Q at p through the table's order, as a world-frame
// polynomial potential (used by the lemma checks and the global stage).
Potential taylor_polynomial(const DerivTable& jets, const Vec2& p);

namespace detail {

// Per-node measurable grids for the stage-K extraction, in the family frame.
struct StageGrids {
    TangentFamily family;
    int stage = 1; // K
    // Nodes include t = 0 plus two guard nodes past t_max whose raw values
    // stabilize the fits; the extraction uses the first `usable` nodes.
    size_t usable = 0;
    std::vector<double> ts; // includes the t = 0 node
    std::vector<double> ell;
    std::vector<Vec2> c, b;   // frame coordinates
    std::vector<Vec4> R;      // frame components
    // Restricted t-partials of the vortex positions at s = l(t).
    std::vector<Vec2> P1p, P1m, P2p, P2m, P3p, P3m;
    // Restricted t-partials of the velocity gap g and of M g.
    std::vector<Vec4> E, u1, u2, u3;
    std::vector<Vec4> m0, m1, m2, m3;
    // Fitted l-derivatives at the nodes.
    std::vector<double> ell_d1, ell_d2, ell_d3, ell_d4;
};

struct ExtractionResult {
    Vec2 normal_pair;      // d2^K grad_perp Q(p) (frame): (d2^{K+1} Q, -d1 d2^K Q)
    Vec2 uncertainty;
    double ell_prime;
    Vec4 lim_R;            // fitted limit of R^(2K+1)
    Vec4 known_sum;        // assembled known-term limits
};

StageGrids build_stage_grids(const ConvexDomain& domain, const TangentFamily& family,
                             const MeasureOracle& oracle, const OutsidePotential& outside,
                             const BoundaryVectorField& grad_field,
                             const BoundaryMatrixField* hess_field, int stage,
                             const RecoverOptions& opts);

ExtractionResult extract_normal_derivative(const StageGrids& grids,
                                           const OutsidePotential& outside,
                                           const RecoverOptions& opts);

} // namespace detail

} // namespace vortexjet

#endif
