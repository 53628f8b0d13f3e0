#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wordasimage/augment.hpp"
#include "wordasimage/error.hpp"
#include "wordasimage/font.hpp"
#include "wordasimage/gradcheck.hpp"
#include "wordasimage/triangulation.hpp"

using namespace wordasimage;

namespace {

const char* kFont = WORDASIMAGE_TEST_DATA "/DejaVuSans.ttf";

GlyphPath polygon_path(const std::vector<Vec2>& pts) {
  // Treat every vertex as a point of the control polygon; the cubic
  // structure only needs 3n points.
  GlyphPath p;
  p.points = pts;
  p.subpaths.push_back({0, pts.size() / 3});
  return p;
}

double area(const std::vector<Vec2>& pts, const std::array<std::uint32_t, 3>& t) {
  const Vec2 a = pts[t[0]], b = pts[t[1]], c = pts[t[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

double polygon_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

// Crossing-number winding, independent of the library's.
int winding(const std::vector<Vec2>& poly, Vec2 p) {
  int w = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y && b.y > p.y && side > 0) ++w;
    if (a.y > p.y && b.y <= p.y && side < 0) --w;
  }
  return w;
}

// Interior angle at `at` between rays to `u` and `v`.
double angle_at(Vec2 at, Vec2 u, Vec2 v) {
  const double a1 = std::atan2(u.y - at.y, u.x - at.x);
  const double a2 = std::atan2(v.y - at.y, v.x - at.x);
  double d = a2 - a1;
  while (d <= -std::numbers::pi) d += 2 * std::numbers::pi;
  while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
  return d;
}

// Mean over points of the squared angle changes of
// all corners at that point.
double explicit_acap(const std::vector<Vec2>& p, const std::vector<Vec2>& q, const Triangulation& tri) {
  double s = 0.0;
  for (const auto& t : tri.triangles) {
    for (int c = 0; c < 3; ++c) {
      const auto i = t[c], j = t[(c + 1) % 3], k = t[(c + 2) % 3];
      const double d = angle_at(p[i], p[j], p[k]) - angle_at(q[i], q[j], q[k]);
      s += d * d;
    }
  }
  return s / static_cast<double>(p.size());
}

GlyphPath letter(char32_t ch, std::size_t target = 26) {
  const FontFace face = FontFace::from_file(kFont);
  return subdivide_to_target(to_cubics(face.outline(ch)), target).path;
}

}  // namespace

TEST(Triangulate, Square) {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Triangulation tri = triangulate_polygons(pts, {{0, 1, 2, 3}});
  ASSERT_EQ(tri.triangles.size(), 2u);
  double total = 0.0;
  for (const auto& t : tri.triangles) {
    EXPECT_GT(area(pts, t), 1e-12);
    total += area(pts, t);
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Triangulate, ConvexPolygonsGiveNMinusTwo) {
  for (int n = 3; n <= 60; ++n) {
    std::vector<Vec2> pts;
    std::vector<std::uint32_t> ring;
    for (int i = 0; i < n; ++i) {
      const double a = 2 * std::numbers::pi * i / n;
      pts.push_back({std::cos(a), 0.7 * std::sin(a)});
      ring.push_back(static_cast<std::uint32_t>(i));
    }
    EXPECT_EQ(triangulate_polygons(pts, {ring}).triangles.size(), static_cast<std::size_t>(n - 2)) << n;
  }
}

TEST(Triangulate, LetterOAnnulusArea) {
  const GlyphPath o = letter(U'O');
  ASSERT_EQ(o.subpaths.size(), 2u);
  const Triangulation tri = triangulate_interior(o);
  double total = 0.0;
  for (const auto& t : tri.triangles) total += area(o.points, t);
  const double a0 = std::abs(polygon_area(o.control_polygon(0)));
  const double a1 = std::abs(polygon_area(o.control_polygon(1)));
  const double outer = std::max(a0, a1), hole = std::min(a0, a1);
  EXPECT_NEAR(total, outer - hole, 1e-6 * (outer - hole));
}

TEST(Triangulate, InvariantsOnLetters) {
  int triangulated = 0;
  for (char32_t ch : std::u32string(U"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz")) {
    const GlyphPath g = letter(ch, ch < U'a' ? 26 : 24);
    Triangulation tri;
    try {
      tri = triangulate_interior(g);
    } catch (const Error& e) {
      // Control polygons of some glyphs fold over; that must be reported,
      // never silently triangulated.
      EXPECT_EQ(e.code(), ErrorCode::SelfIntersecting) << static_cast<char>(ch);
      continue;
    }
    ++triangulated;
    std::vector<std::vector<Vec2>> polys;
    for (std::size_t s = 0; s < g.subpaths.size(); ++s) polys.push_back(g.control_polygon(s));
    std::vector<bool> used(g.points.size(), false);
    const CornerAngles angles = corner_angles(g.points, tri);
    for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
      const auto& tr = tri.triangles[t];
      EXPECT_GT(area(g.points, tr), 1e-12);
      const Vec2 c = (1.0 / 3.0) * (g.points[tr[0]] + g.points[tr[1]] + g.points[tr[2]]);
      int w = 0;
      for (const auto& poly : polys) w += winding(poly, c);
      EXPECT_NE(w, 0) << static_cast<char>(ch);
      EXPECT_NEAR(angles.angles[3 * t] + angles.angles[3 * t + 1] + angles.angles[3 * t + 2], std::numbers::pi, 1e-9);
      for (auto v : tr) used[v] = true;
    }
    for (std::size_t j = 0; j < used.size(); ++j) {
      EXPECT_TRUE(used[j]) << static_cast<char>(ch) << " point " << j;
      EXPECT_EQ(tri.vertex_angles[j].empty(), !used[j]);
    }
  }
  EXPECT_EQ(triangulated, 52);
}

TEST(Triangulate, Errors) {
  const std::vector<Vec2> bowtie{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  try {
    triangulate_polygons(bowtie, {{0, 1, 2, 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SelfIntersecting);
  }
  const std::vector<Vec2> dup{{0, 0}, {1, 0}, {1, 0}, {0, 1}};
  try {
    triangulate_polygons(dup, {{0, 1, 2, 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(CornerAngles, KnownTriangles) {
  const std::vector<Vec2> eq{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
  const Triangulation t1 = triangulate_polygons(eq, {{0, 1, 2}});
  for (double a : corner_angles(eq, t1).angles) EXPECT_NEAR(a, std::numbers::pi / 3, 1e-12);

  const std::vector<Vec2> right{{0, 0}, {1, 0}, {0, 1}};
  const Triangulation t2 = triangulate_polygons(right, {{0, 1, 2}});
  const CornerAngles a = corner_angles(right, t2);
  for (int slot = 0; slot < 3; ++slot) {
    const auto v = t2.triangles[0][slot];
    EXPECT_NEAR(a.angles[slot], v == 0 ? std::numbers::pi / 2 : std::numbers::pi / 4, 1e-12);
  }
}

TEST(Acap, SimilarityInvariance) {
  Rng rng(3);
  for (int n = 0; n < 20; ++n) {
    const GlyphPath blob = random_blob(rng, 4 + n % 5);
    const Triangulation tri = triangulate_interior(blob);
    const double th = rng.uniform(-3.0, 3.0), s = rng.uniform(0.2, 5.0);
    const Vec2 shift{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    std::vector<Vec2> moved, scaled;
    for (Vec2 p : blob.points) {
      moved.push_back(Vec2{std::cos(th) * p.x - std::sin(th) * p.y, std::sin(th) * p.x + std::cos(th) * p.y} + shift);
      scaled.push_back(2.0 * p);
    }
    EXPECT_LE(acap_loss(blob.points, blob.points, tri).loss, 1e-10);
    EXPECT_LE(acap_loss(blob.points, moved, tri).loss, 1e-10);
    EXPECT_LE(acap_loss(blob.points, scaled, tri).loss, 1e-10);
    for (Vec2 g : acap_loss(blob.points, blob.points, tri).grad) EXPECT_EQ(g, (Vec2{0, 0}));
  }
}

TEST(Acap, UnitSquareVertexMoved) {
  const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Triangulation tri = triangulate_polygons(sq, {{0, 1, 2, 3}});
  std::vector<Vec2> moved = sq;
  moved[2].x += 0.1;
  const AcapResult r = acap_loss(sq, moved, tri);
  EXPECT_NEAR(r.loss, explicit_acap(sq, moved, tri), 1e-14);
  EXPECT_GT(r.loss, 0.0);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 4; ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      std::vector<Vec2> plus = moved, minus = moved;
      (axis ? plus[i].y : plus[i].x) += h;
      (axis ? minus[i].y : minus[i].x) -= h;
      const double fd = (explicit_acap(sq, plus, tri) - explicit_acap(sq, minus, tri)) / (2 * h);
      const double an = axis ? r.grad[i].y : r.grad[i].x;
      EXPECT_LE(std::abs(an - fd), 1e-4 * std::max({std::abs(an), std::abs(fd), 1e-8})) << i << "," << axis;
    }
  }
}

TEST(Acap, GradientMatchesFiniteDifferences) {
  Rng rng(17);
  int checked = 0;
  while (checked < 100) {
    const GlyphPath blob = random_blob(rng, 4 + checked % 4);
    const Triangulation tri = triangulate_interior(blob);
    std::vector<Vec2> q = blob.points;
    for (Vec2& p : q) p += Vec2{rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)};
    const CornerAngles ang = corner_angles(q, tri);
    if (*std::min_element(ang.angles.begin(), ang.angles.end()) <= 0.05) continue;
    ++checked;
    const AcapResult r = acap_loss(blob.points, q, tri);
    EXPECT_NEAR(r.loss, explicit_acap(blob.points, q, tri), 1e-12);
    const std::size_t i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(q.size()) - 1));
    for (int axis = 0; axis < 2; ++axis) {
      std::vector<Vec2> plus = q, minus = q;
      (axis ? plus[i].y : plus[i].x) += 1e-6;
      (axis ? minus[i].y : minus[i].x) -= 1e-6;
      const double fd = (explicit_acap(blob.points, plus, tri) - explicit_acap(blob.points, minus, tri)) / 2e-6;
      const double an = axis ? r.grad[i].y : r.grad[i].x;
      EXPECT_LE(std::abs(an - fd), 1e-4 * std::max({std::abs(an), std::abs(fd), 1e-8}));
    }
  }
}

TEST(Acap, FlippedTriangleStaysFinite) {
  const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Triangulation tri = triangulate_polygons(sq, {{0, 1, 2, 3}});
  std::vector<Vec2> folded = sq;
  folded[2] = {-0.5, -0.5};
  const AcapResult r = acap_loss(sq, folded, tri);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_GT(r.loss, 0.0);
  std::vector<Vec2> collapsed = sq;
  collapsed[2] = collapsed[1];
  const AcapResult c = acap_loss(sq, collapsed, tri);
  EXPECT_TRUE(c.degenerate);
  for (Vec2 g : c.grad) EXPECT_TRUE(std::isfinite(g.x) && std::isfinite(g.y));
}

TEST(Acap, Preconditions) {
  const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Triangulation tri = triangulate_polygons(sq, {{0, 1, 2, 3}});
  const std::vector<Vec2> three{{0, 0}, {1, 0}, {1, 1}};
  try {
    acap_loss(sq, three, tri);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
  }
  std::vector<Vec2> other = sq;
  other[0].x += 1e-3;
  EXPECT_THROW(acap_loss(other, sq, tri), Error);
}

TEST(Triangulate, SvgOverlay) {
  const GlyphPath o = letter(U'O');
  const Triangulation tri = triangulate_interior(o);
  const std::string svg = triangulation_svg(o, tri);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("fill-rule=\"nonzero\""), std::string::npos);
  EXPECT_NE(svg.find("stroke"), std::string::npos);
}
