// Tables of partial derivatives d1^j d2^k Q(x) for j+k <= order, plus the
// multilinear contractions of grad-perp Q that the flow-comparison machinery
// uses. Perp convention: grad_perp Q = (d2 Q, -d1 Q).
#ifndef VORTEXJET_JET_HPP
#define VORTEXJET_JET_HPP

#include <cassert>
#include <vector>

#include "vortexjet/vec.hpp"

namespace vortexjet {

class DerivTable {
public:
    DerivTable() : order_(0), v_(1, 0.0) {}
    explicit DerivTable(int order) : order_(order), v_(size_for(order), 0.0) {}

    int order() const { return order_; }

    double operator()(int j, int k) const {
        assert(j >= 0 && k >= 0 && j + k <= order_);
        return v_[index(j, k)];
    }
    double& at(int j, int k) {
        assert(j >= 0 && k >= 0 && j + k <= order_);
        return v_[index(j, k)];
    }

    DerivTable& operator+=(const DerivTable& o) {
        assert(o.order_ >= order_);
        for (int n = 0; n <= order_; ++n)
            for (int k = 0; k <= n; ++k) at(n - k, k) += o(n - k, k);
        return *this;
    }
    DerivTable& operator*=(double s) {
        for (double& x : v_) x *= s;
        return *this;
    }

    double value() const { return (*this)(0, 0); }
    Vec2 grad() const { return {(*this)(1, 0), (*this)(0, 1)}; }
    Vec2 grad_perp() const { return {(*this)(0, 1), -(*this)(1, 0)}; }

    // n-th symmetric derivative tensor of Q contracted with vectors u[0..n-1].
    double contract(const Vec2* u, int n) const {
        assert(n <= order_);
        double total = 0.0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            int k = 0;
            double prod = 1.0;
            for (int i = 0; i < n; ++i) {
                if (mask & (1u << i)) {
                    ++k;
                    prod *= u[i].x2;
                } else {
                    prod *= u[i].x1;
                }
            }
            total += (*this)(n - k, k) * prod;
        }
        return total;
    }

    // m-th derivative of grad_perp Q contracted with m direction vectors:
    // component 1 carries one extra d2, component 2 carries -(one extra d1).
    Vec2 dgp(const Vec2* u, int m) const {
        assert(m + 1 <= order_);
        double c1 = 0.0, c2 = 0.0;
        for (unsigned mask = 0; mask < (1u << m); ++mask) {
            int k = 0;
            double prod = 1.0;
            for (int i = 0; i < m; ++i) {
                if (mask & (1u << i)) {
                    ++k;
                    prod *= u[i].x2;
                } else {
                    prod *= u[i].x1;
                }
            }
            c1 += (*this)(m - k, k + 1) * prod;
            c2 -= (*this)(m - k + 1, k) * prod;
        }
        return {c1, c2};
    }

    Vec2 dgp1(const Vec2& u) const {
        return dgp(&u, 1);
    }
    Vec2 dgp2(const Vec2& u, const Vec2& v) const {
        const Vec2 a[2] = {u, v};
        return dgp(a, 2);
    }
    Vec2 dgp3(const Vec2& u, const Vec2& v, const Vec2& w) const {
        const Vec2 a[3] = {u, v, w};
        return dgp(a, 3);
    }
    Vec2 dgp4(const Vec2& u, const Vec2& v, const Vec2& w, const Vec2& z) const {
        const Vec2 a[4] = {u, v, w, z};
        return dgp(a, 4);
    }

    // Jacobian matrix of x -> grad_perp Q(x): rows are components, columns
    // are derivative directions.
    Mat2 dgp_matrix() const {
        return Mat2::columns(dgp1({1, 0}), dgp1({0, 1}));
    }

    // Derivative table of Q in a rotated/translated frame: Qf(z) = Q(p + E z)
    // where E has columns (e1, e2). Entries are symmetric tensor contractions
    // with j copies of e1 and k copies of e2.
    DerivTable rotate_to_frame(const Frame2& f) const {
        DerivTable out(order_);
        std::vector<Vec2> dirs(order_);
        for (int n = 0; n <= order_; ++n) {
            for (int k = 0; k <= n; ++k) {
                for (int i = 0; i < n - k; ++i) dirs[i] = f.e1;
                for (int i = n - k; i < n; ++i) dirs[i] = f.e2;
                out.at(n - k, k) = contract(dirs.data(), n);
            }
        }
        return out;
    }

private:
    static int size_for(int order) { return (order + 1) * (order + 2) / 2; }
    int index(int j, int k) const {
        const int n = j + k;
        return n * (n + 1) / 2 + k;
    }

    int order_;
    std::vector<double> v_;
};

} // namespace vortexjet

#endif
