#include "wordasimage/geometry.hpp"

#include <algorithm>

#include "wordasimage/error.hpp"

namespace wordasimage {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedFont: return "UnsupportedFont";
    case ErrorCode::MissingGlyph: return "MissingGlyph";
    case ErrorCode::EmptyGlyph: return "EmptyGlyph";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::SelfIntersecting: return "SelfIntersecting";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::CanvasMismatch: return "CanvasMismatch";
    case ErrorCode::EmptyWord: return "EmptyWord";
    case ErrorCode::ServiceUnavailable: return "ServiceUnavailable";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::array<double, 4> bernstein3(double t) {
  const double s = 1.0 - t;
  return {s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t};
}

Vec2 evaluate(const Cubic& c, double t) {
  const auto b = bernstein3(t);
  return b[0] * c[0] + b[1] * c[1] + b[2] * c[2] + b[3] * c[3];
}

std::pair<Cubic, Cubic> split(const Cubic& c, double t) {
  const Vec2 p01 = lerp(c[0], c[1], t);
  const Vec2 p12 = lerp(c[1], c[2], t);
  const Vec2 p23 = lerp(c[2], c[3], t);
  const Vec2 p012 = lerp(p01, p12, t);
  const Vec2 p123 = lerp(p12, p23, t);
  const Vec2 mid = lerp(p012, p123, t);
  return {Cubic{c[0], p01, p012, mid}, Cubic{mid, p123, p23, c[3]}};
}

Cubic elevate_line(Vec2 p0, Vec2 p1) {
  return {p0, p0 + (1.0 / 3.0) * (p1 - p0), p0 + (2.0 / 3.0) * (p1 - p0), p1};
}

Cubic elevate_quadratic(Vec2 p0, Vec2 q, Vec2 p2) {
  return {p0, p0 + (2.0 / 3.0) * (q - p0), p2 + (2.0 / 3.0) * (q - p2), p2};
}

namespace {

double flatten_length(const Cubic& c, double tolerance, int depth) {
  const double chord = distance(c[0], c[3]);
  const double polygon = distance(c[0], c[1]) + distance(c[1], c[2]) + distance(c[2], c[3]);
  // The true length lies between the chord and the control polygon.
  if (polygon - chord <= tolerance || depth >= 40) {
    return 0.5 * (chord + polygon);
  }
  const auto [left, right] = split(c, 0.5);
  return flatten_length(left, 0.5 * tolerance, depth + 1) +
         flatten_length(right, 0.5 * tolerance, depth + 1);
}

}  // namespace

double arc_length(const Cubic& c, double tolerance) {
  if (tolerance <= 0.0) {
    double min_x = c[0].x, max_x = c[0].x, min_y = c[0].y, max_y = c[0].y;
    for (const Vec2& p : c) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    tolerance = 1e-7 * std::hypot(max_x - min_x, max_y - min_y);
    if (tolerance == 0.0) return 0.0;
  }
  return flatten_length(c, tolerance, 0);
}

double shoelace_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * twice;
}

int winding_number(std::span<const Vec2> polygon, Vec2 p) {
  int winding = 0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[(i + 1) % polygon.size()];
    if (a.y <= p.y) {
      if (b.y > p.y && cross(b - a, p - a) > 0.0) ++winding;
    } else {
      if (b.y <= p.y && cross(b - a, p - a) < 0.0) --winding;
    }
  }
  return winding;
}

}  // namespace wordasimage
