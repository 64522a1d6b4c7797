#pragma once

#include <cmath>
#include <stdexcept>

namespace hbsim {

/// Fixed-size 2-vector. All state, input and error quantities in this
/// library are pairs, so no general linear algebra is pulled in.
struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    constexpr Vec2 operator+(const Vec2& o) const { return {x1 + o.x1, x2 + o.x2}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x1 - o.x1, x2 - o.x2}; }
    constexpr Vec2 operator*(double s) const { return {x1 * s, x2 * s}; }
    constexpr double dot(const Vec2& o) const { return x1 * o.x1 + x2 * o.x2; }
    double norm() const { return std::hypot(x1, x2); }
    bool finite() const { return std::isfinite(x1) && std::isfinite(x2); }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Fixed-size 2x2 matrix, row-major fields.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr Mat2 operator+(const Mat2& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    constexpr Mat2 operator-(const Mat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    constexpr Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    constexpr Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    constexpr Vec2 operator*(const Vec2& v) const {
        return {a11 * v.x1 + a12 * v.x2, a21 * v.x1 + a22 * v.x2};
    }

    constexpr Mat2 transpose() const { return {a11, a21, a12, a22}; }
    constexpr double trace() const { return a11 + a22; }
    constexpr double det() const { return a11 * a22 - a12 * a21; }

    /// Entrywise max-abs norm; used for scaling decisions and residual checks.
    double max_abs() const {
        return std::max(std::max(std::fabs(a11), std::fabs(a12)),
                        std::max(std::fabs(a21), std::fabs(a22)));
    }
    bool finite() const {
        return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a21) &&
               std::isfinite(a22);
    }
};

constexpr Mat2 operator*(double s, const Mat2& m) { return m * s; }

}  // namespace hbsim
