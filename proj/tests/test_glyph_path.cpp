#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hausdorff.hpp"
#include "wordasimage/error.hpp"
#include "wordasimage/font.hpp"
#include "wordasimage/glyph_path.hpp"

using namespace wordasimage;
using testing_support::bezier;

namespace {

const char* kFont = WORDASIMAGE_TEST_DATA "/DejaVuSans.ttf";

// Composite Simpson rule on |B'(t)|.
double quadrature_length(const Cubic& c, int intervals = 20000) {
  const auto speed = [&](double t) {
    const double s = 1.0 - t;
    const Vec2 d = 3 * s * s * (c[1] - c[0]) + 6 * s * t * (c[2] - c[1]) + 3 * t * t * (c[3] - c[2]);
    return std::hypot(d.x, d.y);
  };
  const double h = 1.0 / intervals;
  double sum = speed(0.0) + speed(1.0);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * speed(i * h);
  return sum * h / 3.0;
}

GlyphPath unit_square() {
  GlyphPath p;
  const Vec2 corners[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int i = 0; i < 4; ++i) {
    const Cubic c = elevate_line(corners[i], corners[(i + 1) % 4]);
    p.points.insert(p.points.end(), {c[0], c[1], c[2]});
  }
  p.subpaths.push_back({0, 4});
  return p;
}

Vec2 quadratic(Vec2 p0, Vec2 q, Vec2 p2, double t) {
  const double s = 1.0 - t;
  return s * s * p0 + 2 * s * t * q + t * t * p2;
}

}  // namespace

TEST(Elevation, LineControlsAtThirds) {
  const Cubic c = elevate_line({0, 0}, {3, 0});
  EXPECT_EQ(c[1], (Vec2{1, 0}));
  EXPECT_EQ(c[2], (Vec2{2, 0}));
}

TEST(Elevation, QuadraticControls) {
  const Vec2 p0{0, 0}, q{3, 6}, p2{6, 0};
  const Cubic c = elevate_quadratic(p0, q, p2);
  EXPECT_NEAR(c[1].x, 2.0, 1e-15);
  EXPECT_NEAR(c[1].y, 4.0, 1e-15);
  EXPECT_NEAR(c[2].x, 4.0, 1e-15);
  EXPECT_NEAR(c[2].y, 4.0, 1e-15);
}

TEST(Elevation, RandomQuadraticsAreExact) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Vec2 p0{u(rng), u(rng)}, q{u(rng), u(rng)}, p2{u(rng), u(rng)};
    const Cubic c = elevate_quadratic(p0, q, p2);
    for (int i = 0; i < 100; ++i) {
      const double t = i / 99.0;
      worst = std::max(worst, distance(bezier(c, t), quadratic(p0, q, p2, t)));
    }
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(ToCubics, NormalizesAndPreservesCurve) {
  const FontFace face = FontFace::from_file(kFont);
  const GlyphOutline o = face.outline(U'O');
  const GlyphPath p = to_cubics(o, "O", "DejaVuSans.ttf");
  ASSERT_EQ(p.subpaths.size(), 2u);
  const double upem = o.units_per_em;
  for (std::size_t s = 0; s < o.contours.size(); ++s) {
    ASSERT_EQ(p.subpaths[s].segment_count, o.contours[s].segments.size());
    for (std::size_t k = 0; k < o.contours[s].segments.size(); ++k) {
      for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const Vec2 raw = o.contours[s].segments[k].evaluate(t);
        const Vec2 expect{raw.x / upem, (raw.y - o.descender) / upem};
        EXPECT_LE(distance(bezier(p.segment(s, k), t), expect), 1e-9);
      }
    }
  }
  EXPECT_NEAR(p.advance, 1612.0 / 2048.0, 1e-15);
}

TEST(ArcLength, Degenerate) { EXPECT_EQ(arc_length({Vec2{1, 2}, Vec2{1, 2}, Vec2{1, 2}, Vec2{1, 2}}), 0.0); }

TEST(ArcLength, StraightLine) {
  EXPECT_NEAR(arc_length({Vec2{0, 0}, Vec2{1.0 / 3, 0}, Vec2{2.0 / 3, 0}, Vec2{1, 0}}), 1.0, 1e-6);
}

TEST(ArcLength, KappaHalfCircle) {
  const double k = 4.0 / 3.0 * (std::numbers::sqrt2 - 1.0);
  const Cubic q1{Vec2{1, 0}, Vec2{1, k}, Vec2{k, 1}, Vec2{0, 1}};
  const Cubic q2{Vec2{0, 1}, Vec2{-k, 1}, Vec2{-1, k}, Vec2{-1, 0}};
  const double got = arc_length(q1) + arc_length(q2);
  const double oracle = quadrature_length(q1) + quadrature_length(q2);
  EXPECT_NEAR(got, std::numbers::pi, 2e-3);
  EXPECT_NEAR(got, oracle, 1e-6 * oracle);
}

TEST(ArcLength, MatchesQuadratureOnRandomCubics) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 50; ++n) {
    const Cubic c{Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}, Vec2{u(rng), u(rng)}};
    const double oracle = quadrature_length(c);
    EXPECT_NEAR(arc_length(c), oracle, 1e-6 * oracle);
  }
}

TEST(Subdivision, AlreadyAtTarget) {
  const GlyphPath sq = unit_square();
  const SubdivisionResult r = subdivide_to_target(sq, sq.points.size());
  EXPECT_EQ(r.path.points, sq.points);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_FALSE(r.target_unreachable);
}

TEST(Subdivision, TargetBelowCountIsFlagged) {
  const GlyphPath sq = unit_square();
  const SubdivisionResult r = subdivide_to_target(sq, 4);
  EXPECT_TRUE(r.target_unreachable);
  EXPECT_EQ(r.path.points, sq.points);
}

TEST(Subdivision, SingleCubicSplitIsExact) {
  GlyphPath p;
  const Cubic c{Vec2{0, 0}, Vec2{0.2, 0.9}, Vec2{0.8, -0.4}, Vec2{1, 0.3}};
  p.points = {c[0], c[1], c[2]};
  p.subpaths.push_back({0, 1});
  // Closed single segment: the end point wraps to the start.
  const Cubic closed = p.segment(0, 0);
  const SubdivisionResult r = subdivide_to_target(p, 4);
  ASSERT_EQ(r.path.subpaths[0].segment_count, 2u);
  const Cubic left = r.path.segment(0, 0);
  const Cubic right = r.path.segment(0, 1);
  double worst = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double t = i / 63.0;
    const Vec2 expect = bezier(closed, t);
    const Vec2 got = t <= 0.5 ? bezier(left, 2 * t) : bezier(right, 2 * t - 1);
    worst = std::max(worst, distance(expect, got));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Subdivision, UnitSquareSplitsAllTiedSegments) {
  const SubdivisionResult r = subdivide_to_target(unit_square(), 13);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.path.segment_count(), 8u);
  EXPECT_EQ(r.path.points.size(), 24u);
}

TEST(Subdivision, CountGrowsEveryIteration) {
  const FontFace face = FontFace::from_file(kFont);
  GlyphPath p = to_cubics(face.outline(U'S'));
  for (int i = 0; i < 6; ++i) {
    const SubdivisionResult r = subdivide_to_target(p, p.points.size() + 1);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_GT(r.path.points.size(), p.points.size());
    p = r.path;
  }
}

TEST(Subdivision, AllLettersKeepGeometryAndReachTargets) {
  const FontFace face = FontFace::from_file(kFont);
  const SubdivisionTargets targets;
  for (const char* set : {"ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz"}) {
    for (const char* c = set; *c; ++c) {
      const std::string letter(1, *c);
      const GlyphPath original = to_cubics(face.outline(static_cast<char32_t>(*c)), letter);
      const SubdivisionResult r = subdivide_to_target(original, targets.target_for(letter));
      EXPECT_GE(r.path.points.size(), targets.target_for(letter)) << letter;
      EXPECT_LE(testing_support::sampled_hausdorff(original, r.path, 32), 1e-8) << letter;
      for (std::size_t s = 0; s < r.path.subpaths.size(); ++s) {
        const auto& sub = r.path.subpaths[s];
        EXPECT_EQ(r.path.segment(s, sub.segment_count - 1)[3], r.path.segment(s, 0)[0]);
      }
    }
  }
}

TEST(Subdivision, TargetTable) {
  SubdivisionTargets t;
  EXPECT_EQ(t.target_for("A"), 26u);
  EXPECT_EQ(t.target_for("q"), 24u);
  EXPECT_EQ(t.target_for("7"), 24u);
  t.overrides["A"] = 40;
  EXPECT_EQ(t.target_for("A"), 40u);
}

TEST(GlyphPathJson, RoundTrip) {
  const FontFace face = FontFace::from_file(kFont);
  const GlyphPath p = to_cubics(face.outline(U'B'), "B", "DejaVuSans.ttf");
  const nlohmann::json doc = to_json(p);
  EXPECT_EQ(doc.at("subpaths").size(), 3u);
  EXPECT_EQ(doc.at("subpaths")[0].at("points").size(), 4 * p.subpaths[0].segment_count);
  const GlyphPath back = glyph_path_from_json(nlohmann::json::parse(doc.dump()));
  EXPECT_EQ(back.points, p.points);
  EXPECT_EQ(back.letter, "B");
  EXPECT_EQ(back.font_id, "DejaVuSans.ttf");
  ASSERT_EQ(back.subpaths.size(), p.subpaths.size());
  for (std::size_t i = 0; i < p.subpaths.size(); ++i) {
    EXPECT_EQ(back.subpaths[i].first_point, p.subpaths[i].first_point);
    EXPECT_EQ(back.subpaths[i].segment_count, p.subpaths[i].segment_count);
  }
}

TEST(GlyphPathJson, RejectsOpenSubpath) {
  nlohmann::json doc = to_json(unit_square());
  doc["subpaths"][0]["points"][3] = {0.5, 0.5};
  try {
    glyph_path_from_json(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPath);
  }
}

TEST(GlyphPath, SharedEndpointIndexing) {
  const GlyphPath sq = unit_square();
  const auto last = sq.segment_indices(0, 3);
  EXPECT_EQ(last[3], 0u);
  EXPECT_EQ(sq.segment_indices(0, 1)[0], sq.segment_indices(0, 0)[3]);
}
