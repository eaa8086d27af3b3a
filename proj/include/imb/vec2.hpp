#pragma once

#include <cmath>

namespace imb {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double k) { x *= k; y *= k; return *this; }
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
constexpr Vec2 operator*(Vec2 a, double k) { return {k * a.x, k * a.y}; }
constexpr Vec2 operator/(Vec2 a, double k) { return {a.x / k, a.y / k}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3D cross product.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
// Rotation by +90 degrees.
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double polar_angle(Vec2 a) { return std::atan2(a.y, a.x); }
inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

}  // namespace imb
