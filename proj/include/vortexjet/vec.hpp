// Plane vectors, 2x2 / 4x4 matrices, and the small tensor contractions used
// throughout. The perp convention is u^perp = (u2, -u1), i.e. clockwise
// rotation by 90 degrees.
#ifndef VORTEXJET_VEC_HPP
#define VORTEXJET_VEC_HPP

#include <array>
#include <cmath>

namespace vortexjet {

struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    Vec2() = default;
    Vec2(double a, double b) : x1(a), x2(b) {}

    Vec2 operator+(const Vec2& o) const { return {x1 + o.x1, x2 + o.x2}; }
    Vec2 operator-(const Vec2& o) const { return {x1 - o.x1, x2 - o.x2}; }
    Vec2 operator-() const { return {-x1, -x2}; }
    Vec2 operator*(double s) const { return {x1 * s, x2 * s}; }
    Vec2 operator/(double s) const { return {x1 / s, x2 / s}; }
    Vec2& operator+=(const Vec2& o) { x1 += o.x1; x2 += o.x2; return *this; }
    Vec2& operator-=(const Vec2& o) { x1 -= o.x1; x2 -= o.x2; return *this; }
    Vec2& operator*=(double s) { x1 *= s; x2 *= s; return *this; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x1 * b.x1 + a.x2 * b.x2; }
inline double norm2(const Vec2& v) { return dot(v, v); }
inline double norm(const Vec2& v) { return std::sqrt(norm2(v)); }
inline double cross(const Vec2& a, const Vec2& b) { return a.x1 * b.x2 - a.x2 * b.x1; }

// u^perp = (u2, -u1); perp(perp(u)) = -u and |perp(u)| = |u|.
inline Vec2 perp(const Vec2& u) { return {u.x2, -u.x1}; }
// Counterclockwise rotation by 90 degrees (= -perp).
inline Vec2 rot90ccw(const Vec2& u) { return {-u.x2, u.x1}; }

// Inverse of g -> perp(g): if h = (g2, -g1) then g = (-h2, h1).
inline Vec2 unperp(const Vec2& h) { return {-h.x2, h.x1}; }

struct Mat2 {
    // Row-major entries a[row][col].
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

    static Mat2 identity() { return {1, 0, 0, 1}; }
    static Mat2 zero() { return {}; }
    static Mat2 columns(const Vec2& c1, const Vec2& c2) {
        return {c1.x1, c2.x1, c1.x2, c2.x2};
    }

    Mat2() = default;
    Mat2(double m11, double m12, double m21, double m22)
        : a11(m11), a12(m12), a21(m21), a22(m22) {}

    Vec2 operator*(const Vec2& v) const {
        return {a11 * v.x1 + a12 * v.x2, a21 * v.x1 + a22 * v.x2};
    }
    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    Mat2 operator+(const Mat2& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    Mat2 operator-(const Mat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    Mat2 transpose() const { return {a11, a21, a12, a22}; }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }
inline Mat2 outer(const Vec2& a, const Vec2& b) {
    return {a.x1 * b.x1, a.x1 * b.x2, a.x2 * b.x1, a.x2 * b.x2};
}

// Proper rotation frame with columns (e1, e2); used to move between world
// coordinates and a boundary-aligned frame.
struct Frame2 {
    Vec2 origin;
    Vec2 e1; // first axis (unit)
    Vec2 e2; // second axis (unit, e2 = rot90ccw(e1) for right-handed frames)

    Vec2 to_frame_point(const Vec2& x) const {
        const Vec2 d = x - origin;
        return {dot(d, e1), dot(d, e2)};
    }
    Vec2 from_frame_point(const Vec2& z) const {
        return origin + e1 * z.x1 + e2 * z.x2;
    }
    Vec2 to_frame_vec(const Vec2& v) const { return {dot(v, e1), dot(v, e2)}; }
    Vec2 from_frame_vec(const Vec2& v) const { return e1 * v.x1 + e2 * v.x2; }
    Mat2 to_frame_mat(const Mat2& m) const {
        const Mat2 e = Mat2::columns(e1, e2);
        return e.transpose() * m * e;
    }
};

using Vec4 = std::array<double, 4>;

inline Vec4 make_vec4(const Vec2& a, const Vec2& b) {
    return {a.x1, a.x2, b.x1, b.x2};
}
inline Vec2 head2(const Vec4& v) { return {v[0], v[1]}; }
inline Vec2 tail2(const Vec4& v) { return {v[2], v[3]}; }
inline Vec4 operator+(const Vec4& a, const Vec4& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
inline Vec4 operator-(const Vec4& a, const Vec4& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}
inline Vec4 operator*(double s, const Vec4& v) {
    return {s * v[0], s * v[1], s * v[2], s * v[3]};
}
inline double max_abs(const Vec4& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct Mat4 {
    std::array<std::array<double, 4>, 4> a{};

    static Mat4 identity() {
        Mat4 m;
        for (int i = 0; i < 4; ++i) m.a[i][i] = 1.0;
        return m;
    }
    Vec4 operator*(const Vec4& v) const {
        Vec4 r{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) r[i] += a[i][j] * v[j];
        return r;
    }
    Mat4 operator+(const Mat4& o) const {
        Mat4 r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) r.a[i][j] = a[i][j] + o.a[i][j];
        return r;
    }
    Mat4 operator*(double s) const {
        Mat4 r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) r.a[i][j] = a[i][j] * s;
        return r;
    }
};

// 4x4 matrix from 2x2 blocks [[A,B],[C,D]].
inline Mat4 blocks(const Mat2& A, const Mat2& B, const Mat2& C, const Mat2& D) {
    Mat4 m;
    m.a[0][0] = A.a11; m.a[0][1] = A.a12; m.a[1][0] = A.a21; m.a[1][1] = A.a22;
    m.a[0][2] = B.a11; m.a[0][3] = B.a12; m.a[1][2] = B.a21; m.a[1][3] = B.a22;
    m.a[2][0] = C.a11; m.a[2][1] = C.a12; m.a[3][0] = C.a21; m.a[3][1] = C.a22;
    m.a[2][2] = D.a11; m.a[2][3] = D.a12; m.a[3][2] = D.a21; m.a[3][3] = D.a22;
    return m;
}

} // namespace vortexjet

#endif
