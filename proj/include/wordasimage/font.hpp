#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "wordasimage/geometry.hpp"

namespace wordasimage {

enum class SegmentKind { Line, Quadratic, Cubic };

struct OutlineSegment {
  SegmentKind kind = SegmentKind::Line;
  // Line uses [0..1], Quadratic [0..2], Cubic [0..3].
  std::array<Vec2, 4> points{};

  Vec2 start() const { return points[0]; }
  Vec2 end() const;
  Vec2 evaluate(double t) const;
};

struct OutlineContour {
  std::vector<OutlineSegment> segments;
};

/// A glyph outline in font units, nonzero winding, every contour closed.
struct GlyphOutline {
  std::vector<OutlineContour> contours;
  int units_per_em = 0;
  int descender = 0;  // hhea descender, font units (usually negative)
  double advance_width = 0.0;
};

/// Read-only view over a TrueType (glyf-flavoured sfnt) font file.
///
/// Only the tables needed for outline extraction are decoded: head, maxp,
/// hhea, hmtx, cmap (formats 4 and 12), loca and glyf. Composite glyphs are
/// flattened by applying each component's offset and linear transform.
class FontFace {
 public:
  explicit FontFace(std::vector<std::uint8_t> bytes);

  static FontFace from_file(const std::filesystem::path& path);

  int units_per_em() const { return units_per_em_; }
  int descender() const { return descender_; }
  std::size_t glyph_count() const { return glyph_count_; }

  std::optional<std::uint32_t> glyph_index(char32_t ch) const;

  /// Advance width in font units. Throws MissingGlyph.
  double advance_width(char32_t ch) const;

  /// Throws MissingGlyph or EmptyGlyph.
  GlyphOutline outline(char32_t ch) const;

 private:
  struct Table {
    std::size_t offset = 0;
    std::size_t length = 0;
  };

  std::optional<Table> find_table(const char* tag) const;
  Table require_table(const char* tag) const;
  std::uint16_t u16(std::size_t at) const;
  std::uint32_t u32(std::size_t at) const;
  std::int16_t i16(std::size_t at) const { return static_cast<std::int16_t>(u16(at)); }

  std::span<const std::uint8_t> glyph_data(std::uint32_t glyph) const;
  void append_contours(std::uint32_t glyph, const std::array<double, 6>& transform, int depth,
                       std::vector<OutlineContour>& out) const;
  double advance_for_glyph(std::uint32_t glyph) const;

  std::vector<std::uint8_t> bytes_;
  std::size_t base_ = 0;
  std::vector<std::pair<std::array<char, 4>, Table>> tables_;
  int units_per_em_ = 0;
  int descender_ = 0;
  bool long_loca_ = false;
  std::size_t glyph_count_ = 0;
  std::size_t h_metric_count_ = 0;
  std::size_t cmap_subtable_ = 0;
  int cmap_format_ = 0;
};

/// Parse `font_bytes` and extract the outline for `ch`.
GlyphOutline load_glyph(std::span<const std::uint8_t> font_bytes, char32_t ch);

}  // namespace wordasimage
