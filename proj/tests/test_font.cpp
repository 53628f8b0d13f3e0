#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "wordasimage/error.hpp"
#include "wordasimage/font.hpp"
#include "wordasimage/geometry.hpp"

using namespace wordasimage;

namespace {

const char* kFont = WORDASIMAGE_TEST_DATA "/DejaVuSans.ttf";

std::vector<std::uint8_t> font_bytes() {
  std::ifstream in(kFont, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Signed area of a contour sampled along its segments.
double sampled_area(const OutlineContour& c) {
  std::vector<Vec2> pts;
  for (const OutlineSegment& s : c.segments) {
    for (int i = 0; i < 16; ++i) pts.push_back(s.evaluate(i / 16.0));
  }
  return shoelace_area(pts);
}

}  // namespace

// Reference counts and coordinates below were dumped with fontTools.
TEST(Font, Metrics) {
  const FontFace face = FontFace::from_file(kFont);
  EXPECT_EQ(face.units_per_em(), 2048);
  EXPECT_EQ(face.descender(), -483);
  EXPECT_DOUBLE_EQ(face.advance_width(U'O'), 1612.0);
  EXPECT_DOUBLE_EQ(face.advance_width(U'X'), 1403.0);
  EXPECT_DOUBLE_EQ(face.advance_width(U' '), 651.0);
}

TEST(Font, LetterIHasOneContourOfLines) {
  const GlyphOutline o = load_glyph(font_bytes(), U'I');
  ASSERT_EQ(o.contours.size(), 1u);
  ASSERT_EQ(o.contours[0].segments.size(), 4u);
  for (const auto& s : o.contours[0].segments) EXPECT_EQ(s.kind, SegmentKind::Line);
  EXPECT_EQ(o.contours[0].segments[0].start(), (Vec2{201, 1493}));
  EXPECT_EQ(o.contours[0].segments[0].end(), (Vec2{403, 1493}));
}

TEST(Font, LetterOHasOppositelyWoundContours) {
  const GlyphOutline o = load_glyph(font_bytes(), U'O');
  ASSERT_EQ(o.contours.size(), 2u);
  for (const auto& c : o.contours) {
    EXPECT_EQ(c.segments.size(), 8u);
    for (const auto& s : c.segments) EXPECT_EQ(s.kind, SegmentKind::Quadratic);
  }
  EXPECT_LT(sampled_area(o.contours[0]) * sampled_area(o.contours[1]), 0.0);
  // Two consecutive off-curve points imply an on-curve midpoint.
  const OutlineSegment& first = o.contours[0].segments[0];
  EXPECT_EQ(first.start(), (Vec2{807, 1356}));
  EXPECT_EQ(first.points[1], (Vec2{587, 1356}));
  EXPECT_EQ(first.end(), (Vec2{457.5, 1192}));
}

TEST(Font, ContourCounts) {
  const auto bytes = font_bytes();
  EXPECT_EQ(load_glyph(bytes, U'A').contours.size(), 2u);
  EXPECT_EQ(load_glyph(bytes, U'B').contours.size(), 3u);
  EXPECT_EQ(load_glyph(bytes, U'X').contours.size(), 1u);
}

TEST(Font, CompositeGlyphsAreFlattened) {
  const auto bytes = font_bytes();
  EXPECT_EQ(load_glyph(bytes, U'Ä').contours.size(), 4u);
  EXPECT_EQ(load_glyph(bytes, U'é').contours.size(), 3u);
}

TEST(Font, ContoursAreClosed) {
  const FontFace face = FontFace::from_file(kFont);
  for (char32_t ch = U'A'; ch <= U'z'; ++ch) {
    if (ch > U'Z' && ch < U'a') continue;
    for (const auto& c : face.outline(ch).contours) {
      ASSERT_GE(c.segments.size(), 2u);
      for (std::size_t i = 0; i < c.segments.size(); ++i) {
        EXPECT_EQ(c.segments[i].end(), c.segments[(i + 1) % c.segments.size()].start());
      }
    }
  }
}

TEST(Font, SpaceIsEmpty) {
  try {
    load_glyph(font_bytes(), U' ');
    FAIL() << "expected EmptyGlyph";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyGlyph);
  }
}

TEST(Font, UnmappedCharacter) {
  try {
    load_glyph(font_bytes(), U'\U0010FFFD');
    FAIL() << "expected MissingGlyph";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingGlyph);
  }
}

TEST(Font, RejectsGarbageAndCff) {
  std::vector<std::uint8_t> junk(64, 0xAB);
  try {
    FontFace{junk};
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedFont);
  }
  std::vector<std::uint8_t> otto = font_bytes();
  otto[0] = 'O';
  otto[1] = 'T';
  otto[2] = 'T';
  otto[3] = 'O';
  try {
    FontFace{otto};
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedFont);
  }
  std::vector<std::uint8_t> truncated = font_bytes();
  truncated.resize(100);
  EXPECT_THROW(FontFace{truncated}, Error);
}
