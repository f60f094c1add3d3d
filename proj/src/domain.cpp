#include "vortexjet/domain.hpp"

#include <algorithm>
#include <cmath>

#include "vortexjet/quadrature.hpp"

namespace vortexjet {

namespace {
constexpr int kScanSamples = 256;
constexpr int kConvexityCheckSamples = 512;
constexpr double kThetaTol = 1e-13;
} // namespace

ConvexDomain ConvexDomain::circle(const Vec2& center, double radius) {
    if (radius <= 0) throw Error("circle radius must be positive");
    ConvexDomain d;
    d.kind_ = DomainKind::circle;
    d.center_ = center;
    d.radius_ = radius;
    d.finalize();
    return d;
}

ConvexDomain ConvexDomain::ellipse(const Vec2& center, double a1, double a2) {
    if (a1 <= 0 || a2 <= 0) throw Error("ellipse semi-axes must be positive");
    ConvexDomain d;
    d.kind_ = DomainKind::ellipse;
    d.center_ = center;
    d.ax_ = a1;
    d.ay_ = a2;
    d.finalize();
    return d;
}

ConvexDomain ConvexDomain::polar(const Vec2& center, double base_radius,
                                 std::vector<double> cos_coeffs,
                                 std::vector<double> sin_coeffs) {
    if (base_radius <= 0) throw Error("polar base radius must be positive");
    ConvexDomain d;
    d.kind_ = DomainKind::polar;
    d.center_ = center;
    d.base_radius_ = base_radius;
    d.cosc_ = std::move(cos_coeffs);
    d.sinc_ = std::move(sin_coeffs);
    d.finalize();
    return d;
}

void ConvexDomain::finalize() {
    double kmax = 0.0, kmin = 1e300, rmax = 0.0;
    for (int i = 0; i < kConvexityCheckSamples; ++i) {
        const double th = 2.0 * M_PI * i / kConvexityCheckSamples;
        const double k = curvature(th);
        if (!(k > 0.0))
            throw Error("domain is not strictly convex (curvature <= 0 at a boundary sample)");
        kmax = std::max(kmax, k);
        kmin = std::min(kmin, k);
        rmax = std::max(rmax, norm(gamma(th) - center_));
    }
    min_curv_radius_ = 1.0 / kmax;
    max_curv_radius_ = 1.0 / kmin;
    diameter_ = 2.0 * rmax;
}

double ConvexDomain::polar_radius(double theta) const {
    double r = 1.0;
    for (size_t k = 0; k < cosc_.size(); ++k) r += cosc_[k] * std::cos((k + 1) * theta);
    for (size_t k = 0; k < sinc_.size(); ++k) r += sinc_[k] * std::sin((k + 1) * theta);
    return base_radius_ * r;
}

double ConvexDomain::polar_radius_d(double theta) const {
    double r = 0.0;
    for (size_t k = 0; k < cosc_.size(); ++k)
        r -= cosc_[k] * (k + 1) * std::sin((k + 1) * theta);
    for (size_t k = 0; k < sinc_.size(); ++k)
        r += sinc_[k] * (k + 1) * std::cos((k + 1) * theta);
    return base_radius_ * r;
}

double ConvexDomain::polar_radius_dd(double theta) const {
    double r = 0.0;
    for (size_t k = 0; k < cosc_.size(); ++k)
        r -= cosc_[k] * (k + 1) * (k + 1) * std::cos((k + 1) * theta);
    for (size_t k = 0; k < sinc_.size(); ++k)
        r -= sinc_[k] * (k + 1) * (k + 1) * std::sin((k + 1) * theta);
    return base_radius_ * r;
}

Vec2 ConvexDomain::gamma(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    switch (kind_) {
    case DomainKind::circle:
        return center_ + Vec2{radius_ * c, radius_ * s};
    case DomainKind::ellipse:
        return center_ + Vec2{ax_ * c, ay_ * s};
    case DomainKind::polar: {
        const double r = polar_radius(theta);
        return center_ + Vec2{r * c, r * s};
    }
    }
    return center_;
}

Vec2 ConvexDomain::dgamma(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    switch (kind_) {
    case DomainKind::circle:
        return {-radius_ * s, radius_ * c};
    case DomainKind::ellipse:
        return {-ax_ * s, ay_ * c};
    case DomainKind::polar: {
        const double r = polar_radius(theta), rd = polar_radius_d(theta);
        return {rd * c - r * s, rd * s + r * c};
    }
    }
    return {};
}

Vec2 ConvexDomain::d2gamma(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    switch (kind_) {
    case DomainKind::circle:
        return {-radius_ * c, -radius_ * s};
    case DomainKind::ellipse:
        return {-ax_ * c, -ay_ * s};
    case DomainKind::polar: {
        const double r = polar_radius(theta), rd = polar_radius_d(theta),
                     rdd = polar_radius_dd(theta);
        return {rdd * c - 2 * rd * s - r * c, rdd * s + 2 * rd * c - r * s};
    }
    }
    return {};
}

Vec2 ConvexDomain::unit_tangent(double theta) const {
    const Vec2 t = dgamma(theta);
    return t / norm(t);
}

Vec2 ConvexDomain::inward_normal(double theta) const {
    // For a counterclockwise convex parametrization the inward normal is the
    // tangent rotated counterclockwise by 90 degrees.
    return rot90ccw(unit_tangent(theta));
}

bool ConvexDomain::inside(const Vec2& x) const { return level(x) > 0.0; }

double ConvexDomain::level(const Vec2& x) const {
    const Vec2 d = x - center_;
    switch (kind_) {
    case DomainKind::circle:
        return radius_ - norm(d);
    case DomainKind::ellipse:
        return 1.0 - (d.x1 / ax_) * (d.x1 / ax_) - (d.x2 / ay_) * (d.x2 / ay_);
    case DomainKind::polar: {
        const double rho = norm(d);
        if (rho == 0.0) return polar_radius(0.0);
        return polar_radius(std::atan2(d.x2, d.x1)) - rho;
    }
    }
    return 0.0;
}

double ConvexDomain::curvature(double theta) const {
    const Vec2 g1 = dgamma(theta), g2 = d2gamma(theta);
    const double speed = norm(g1);
    return cross(g1, g2) / (speed * speed * speed);
}

BoundaryProjection ConvexDomain::nearest_boundary(const Vec2& x) const {
    if (kind_ == DomainKind::circle) {
        const Vec2 d = x - center_;
        const double rho = norm(d);
        if (rho < 1e-14)
            // Equidistant from every boundary point; report the distance so
            // project_to_boundary can reject it.
            return {0.0, gamma(0.0), radius_};
        const double theta = std::atan2(d.x2, d.x1);
        return {theta, gamma(theta), radius_ - rho};
    }

    // Coarse angular scan, then damped Newton on the foot-point condition
    // g(theta) = (x - gamma(theta)) . dgamma(theta) = 0.
    double best_theta = 0.0, best_d2 = 1e300;
    for (int i = 0; i < kScanSamples; ++i) {
        const double th = 2.0 * M_PI * i / kScanSamples;
        const double d2 = norm2(x - gamma(th));
        if (d2 < best_d2) {
            best_d2 = d2;
            best_theta = th;
        }
    }
    double theta = best_theta;
    for (int it = 0; it < 100; ++it) {
        const Vec2 diff = x - gamma(theta);
        const Vec2 g1 = dgamma(theta), g2 = d2gamma(theta);
        const double g = dot(diff, g1);
        const double dg = -norm2(g1) + dot(diff, g2);
        if (dg == 0.0) break;
        double step = -g / dg;
        // Damping keeps the iterate within the scan cell.
        const double cap = 2.0 * M_PI / kScanSamples;
        step = std::clamp(step, -cap, cap);
        theta += step;
        if (std::abs(step) < kThetaTol) break;
    }
    const Vec2 foot = gamma(theta);
    const double dist = norm(x - foot);
    return {theta, foot, inside(x) ? dist : -dist};
}

BoundaryProjection ConvexDomain::project_to_boundary(const Vec2& x) const {
    BoundaryProjection pr = nearest_boundary(x);
    if (std::abs(pr.signed_distance) > tube_radius() * (1.0 + 1e-9))
        throw NoUniqueProjection("point outside the projection validity tube");
    return pr;
}

double ConvexDomain::arclength(double theta0, double theta1) const {
    if (theta0 == theta1) return 0.0;
    return adaptive_integrate_scalar(
        [this](double th) { return norm(dgamma(th)); }, theta0, theta1, 1e-13);
}

double ConvexDomain::theta_at_arclength(double theta0, double s) const {
    double theta = theta0 + s / norm(dgamma(theta0));
    for (int it = 0; it < 60; ++it) {
        const double f = arclength(theta0, theta) - s;
        const double df = norm(dgamma(theta));
        const double step = -f / df;
        theta += step;
        if (std::abs(step) < kThetaTol) break;
    }
    return theta;
}

double tilde_omega_margin(double M, double sigma) {
    if (M < 0) throw Error("gradient bound must be nonnegative");
    if (sigma <= 0) throw Error("sigma must be positive");
    if (M == 0.0) return sigma;
    return std::min(1.0 / (4.0 * M_PI * M), sigma);
}

bool inside_tilde(const ConvexDomain& dom, const Vec2& x, double margin) {
    if (dom.inside(x)) return true;
    const BoundaryProjection pr = dom.nearest_boundary(x);
    return -pr.signed_distance < margin;
}

NormalChart::NormalChart(const ConvexDomain& dom, double theta_base)
    : dom_(&dom), theta_p_(theta_base), p_(dom.gamma(theta_base)) {}

Frame2 NormalChart::frame() const {
    const Vec2 e1 = dom_->unit_tangent(theta_p_);
    return {p_, e1, rot90ccw(e1)};
}

NormalChart::Coords NormalChart::to_normal_coords(const Vec2& x) const {
    const BoundaryProjection pr = dom_->project_to_boundary(x);
    // Shortest angular route from the base to the foot point.
    double dth = std::fmod(pr.theta - theta_p_, 2.0 * M_PI);
    if (dth > M_PI) dth -= 2.0 * M_PI;
    if (dth < -M_PI) dth += 2.0 * M_PI;
    const double z1 = dom_->arclength(theta_p_, theta_p_ + dth);
    return {z1, pr.signed_distance};
}

double NormalChart::theta_at(double z1) const {
    return dom_->theta_at_arclength(theta_p_, z1);
}

Vec2 NormalChart::from_normal_coords(double z1, double z2) const {
    const double theta = theta_at(z1);
    return dom_->gamma(theta) + z2 * dom_->inward_normal(theta);
}

double NormalChart::metric_factor(double z1, double z2) const {
    const double h = 1e-6;
    const Vec2 dxdz1 =
        (from_normal_coords(z1 + h, z2) - from_normal_coords(z1 - h, z2)) / (2 * h);
    return norm2(dxdz1);
}

} // namespace vortexjet
