#pragma once

#include <cmath>

namespace ambientflow {

/// Planar vector / point with value semantics.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator/(const Vec2& a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

using Point2 = Vec2;

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::sqrt(a.x * a.x + a.y * a.y); }
constexpr double norm2(const Vec2& a) { return dot(a, a); }
inline Vec2 normalized(const Vec2& a) { return a / norm(a); }

/// Counterclockwise right-angle rotation R(x,y) = (-y,x).
constexpr Vec2 rot90(const Vec2& a) { return {-a.y, a.x}; }

/// Counterclockwise rotation by `angle` radians.
inline Vec2 rotate(const Vec2& a, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * a.x - s * a.y, s * a.x + c * a.y};
}

inline bool is_finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// 2x2 matrix, row-major. Used for DV (the Jacobian of a field).
struct Mat2 {
    double a = 0.0, b = 0.0;  // row 0
    double c = 0.0, d = 0.0;  // row 1

    constexpr Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
};

/// Spectral (operator) norm of a 2x2 matrix.
inline double operator_norm(const Mat2& m) {
    // sqrt of the largest eigenvalue of M^T M
    const double p = m.a * m.a + m.c * m.c;
    const double q = m.a * m.b + m.c * m.d;
    const double r = m.b * m.b + m.d * m.d;
    const double tr = p + r;
    const double disc = std::sqrt((p - r) * (p - r) + 4.0 * q * q);
    return std::sqrt(0.5 * (tr + disc));
}

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

}  // namespace ambientflow
