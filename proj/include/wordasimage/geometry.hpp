#pragma once

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace wordasimage {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr Vec2 lerp(Vec2 a, Vec2 b, double t) { return a + t * (b - a); }

/// Control points p0, c1, c2, p3 of a cubic Bezier segment.
using Cubic = std::array<Vec2, 4>;

Vec2 evaluate(const Cubic& c, double t);

/// Bernstein basis of degree 3 at t.
std::array<double, 4> bernstein3(double t);

/// Exact de Casteljau split at t.
std::pair<Cubic, Cubic> split(const Cubic& c, double t);

Cubic elevate_line(Vec2 p0, Vec2 p1);
Cubic elevate_quadratic(Vec2 p0, Vec2 q, Vec2 p2);

/// Arc length by recursive flattening. Subdivides until the control polygon
/// and chord lengths agree to within `tolerance` (absolute, split evenly
/// between halves). A non-positive tolerance selects 1e-7 times the
/// control-box diagonal.
double arc_length(const Cubic& c, double tolerance = 0.0);

/// Signed area of a closed polygon (positive for counterclockwise, y-up).
double shoelace_area(std::span<const Vec2> polygon);

/// Winding number of `p` with respect to the closed polygon.
int winding_number(std::span<const Vec2> polygon, Vec2 p);

}  // namespace wordasimage
