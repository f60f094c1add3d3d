// Smooth strictly convex planar domains with a counterclockwise boundary
// parametrization, closest-point projection, boundary-normal charts, and the
// tubular enlargement used by the reconstruction (margin min{1/(4 pi M), sigma}).
#ifndef VORTEXJET_DOMAIN_HPP
#define VORTEXJET_DOMAIN_HPP

#include <memory>
#include <vector>

#include "vortexjet/errors.hpp"
#include "vortexjet/vec.hpp"

namespace vortexjet {

enum class DomainKind { circle, ellipse, polar };

struct BoundaryProjection {
    double theta;          // parameter of the foot point
    Vec2 foot;             // closest boundary point
    double signed_distance; // positive inside, negative outside
};

class ConvexDomain {
public:
    static ConvexDomain circle(const Vec2& center, double radius);
    static ConvexDomain ellipse(const Vec2& center, double semi_axis1, double semi_axis2);
    // r(theta) = base_radius * (1 + sum_k cos_coeffs[k-1] cos(k theta)
    //                             + sum_k sin_coeffs[k-1] sin(k theta))
    static ConvexDomain polar(const Vec2& center, double base_radius,
                              std::vector<double> cos_coeffs,
                              std::vector<double> sin_coeffs);

    DomainKind kind() const { return kind_; }
    const Vec2& center() const { return center_; }

    // Counterclockwise boundary parametrization, period 2 pi.
    Vec2 gamma(double theta) const;
    Vec2 dgamma(double theta) const;
    Vec2 d2gamma(double theta) const;

    Vec2 unit_tangent(double theta) const;
    Vec2 inward_normal(double theta) const;

    bool inside(const Vec2& x) const; // strict (open domain)
    // Smooth level function: > 0 strictly inside, < 0 strictly outside.
    // Not a distance; sign and zero set are what event detection needs.
    double level(const Vec2& x) const;

    double curvature(double theta) const;
    double min_curvature_radius() const { return min_curv_radius_; }
    double max_curvature_radius() const { return max_curv_radius_; }
    double tube_radius() const { return 0.5 * min_curv_radius_; }
    double diameter() const { return diameter_; }

    // Closest boundary point with uniqueness guarantee (validity tube).
    BoundaryProjection project_to_boundary(const Vec2& x) const;
    // Closest boundary point without the tube restriction.
    BoundaryProjection nearest_boundary(const Vec2& x) const;

    // Signed distance to the boundary (positive inside); requires x in the
    // validity tube.
    double signed_distance(const Vec2& x) const {
        return project_to_boundary(x).signed_distance;
    }

    // Arclength along the boundary from theta0 to theta1 (signed, increasing
    // theta positive). theta1 need not be wrapped.
    double arclength(double theta0, double theta1) const;
    // Inverse of s -> arclength(theta0, theta): Newton iteration.
    double theta_at_arclength(double theta0, double s) const;

private:
    ConvexDomain() = default;
    void finalize();

    DomainKind kind_ = DomainKind::circle;
    Vec2 center_{};
    double radius_ = 1.0;                 // circle
    double ax_ = 1.0, ay_ = 1.0;          // ellipse semi-axes
    double base_radius_ = 1.0;            // polar
    std::vector<double> cosc_, sinc_;     // polar coefficients

    double min_curv_radius_ = 0.0;
    double max_curv_radius_ = 0.0;
    double diameter_ = 0.0;

    double polar_radius(double theta) const;
    double polar_radius_d(double theta) const;
    double polar_radius_dd(double theta) const;
};

// Margin of the enlargement: min{(4 pi M)^-1, sigma}; unconstrained (sigma)
// when M = 0.
double tilde_omega_margin(double M, double sigma);

// Membership in the enlarged domain {dist(x, Omega) < margin}.
bool inside_tilde(const ConvexDomain& dom, const Vec2& x, double margin);

// Boundary-normal chart at a base point: z1 = signed arclength of the foot
// point from the base (counterclockwise positive), z2 = signed distance
// (positive inside). Valid within the projection tube.
class NormalChart {
public:
    NormalChart(const ConvexDomain& dom, double theta_base);

    const Vec2& base_point() const { return p_; }
    double theta_base() const { return theta_p_; }
    const ConvexDomain& domain() const { return *dom_; }

    // Boundary-aligned frame at the base point: e1 = unit tangent (ccw),
    // e2 = inward normal. Right-handed.
    Frame2 frame() const;

    struct Coords {
        double z1;
        double z2;
    };
    Coords to_normal_coords(const Vec2& x) const;
    Vec2 from_normal_coords(double z1, double z2) const;

    double theta_at(double z1) const;

    // Metric factor f with e = f (dz1)^2 + (dz2)^2, computed from the chart
    // Jacobian by central differences; f(0,0) = 1.
    double metric_factor(double z1, double z2) const;

private:
    const ConvexDomain* dom_;
    double theta_p_;
    Vec2 p_;
};

} // namespace vortexjet

#endif
