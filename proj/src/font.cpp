#include "wordasimage/font.hpp"

#include <cstring>
#include <optional>
#include <string>
#include <fstream>
#include <iterator>

#include "wordasimage/error.hpp"

namespace wordasimage {

namespace {

constexpr int kMaxCompositeDepth = 8;

// glyf simple-glyph flags
constexpr std::uint8_t kOnCurve = 0x01;
constexpr std::uint8_t kXShort = 0x02;
constexpr std::uint8_t kYShort = 0x04;
constexpr std::uint8_t kRepeat = 0x08;
constexpr std::uint8_t kXSameOrPositive = 0x10;
constexpr std::uint8_t kYSameOrPositive = 0x20;

// glyf composite flags
constexpr std::uint16_t kArgsAreWords = 0x0001;
constexpr std::uint16_t kArgsAreXY = 0x0002;
constexpr std::uint16_t kHaveScale = 0x0008;
constexpr std::uint16_t kMoreComponents = 0x0020;
constexpr std::uint16_t kHaveXYScale = 0x0040;
constexpr std::uint16_t kHaveTwoByTwo = 0x0080;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::UnsupportedFont, what);
}

Vec2 apply(const std::array<double, 6>& m, Vec2 p) {
  return {m[0] * p.x + m[2] * p.y + m[4], m[1] * p.x + m[3] * p.y + m[5]};
}

struct RawPoint {
  Vec2 p;
  bool on_curve;
};

// Turns one TrueType contour (on/off-curve points with implied midpoints)
// into line and quadratic segments.
OutlineContour contour_from_points(const std::vector<RawPoint>& pts) {
  OutlineContour contour;
  const std::size_t n = pts.size();
  if (n < 2) return contour;

  std::size_t first_on = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (pts[i].on_curve) {
      first_on = i;
      break;
    }
  }
  Vec2 start;
  std::size_t begin;
  if (first_on == n) {
    start = lerp(pts[0].p, pts[1].p, 0.5);
    begin = 1;
  } else {
    start = pts[first_on].p;
    begin = first_on + 1;
  }

  Vec2 current = start;
  std::optional<Vec2> control;
  auto emit_line = [&](Vec2 to) {
    if (to == current) return;
    OutlineSegment s;
    s.kind = SegmentKind::Line;
    s.points[0] = current;
    s.points[1] = to;
    contour.segments.push_back(s);
    current = to;
  };
  auto emit_quad = [&](Vec2 q, Vec2 to) {
    OutlineSegment s;
    s.kind = SegmentKind::Quadratic;
    s.points[0] = current;
    s.points[1] = q;
    s.points[2] = to;
    contour.segments.push_back(s);
    current = to;
  };

  for (std::size_t k = 0; k < n; ++k) {
    const RawPoint& rp = pts[(begin + k) % n];
    if (rp.on_curve) {
      if (control) {
        emit_quad(*control, rp.p);
        control.reset();
      } else {
        emit_line(rp.p);
      }
    } else {
      if (control) {
        const Vec2 mid = lerp(*control, rp.p, 0.5);
        emit_quad(*control, mid);
      }
      control = rp.p;
    }
  }
  // Close back to the start point.
  if (control) {
    emit_quad(*control, start);
  } else {
    emit_line(start);
  }
  return contour;
}

}  // namespace

Vec2 OutlineSegment::end() const {
  switch (kind) {
    case SegmentKind::Line: return points[1];
    case SegmentKind::Quadratic: return points[2];
    case SegmentKind::Cubic: return points[3];
  }
  return points[1];
}

Vec2 OutlineSegment::evaluate(double t) const {
  const double s = 1.0 - t;
  switch (kind) {
    case SegmentKind::Line: return s * points[0] + t * points[1];
    case SegmentKind::Quadratic:
      return (s * s) * points[0] + (2.0 * s * t) * points[1] + (t * t) * points[2];
    case SegmentKind::Cubic:
      return wordasimage::evaluate(Cubic{points[0], points[1], points[2], points[3]}, t);
  }
  return points[0];
}

FontFace::FontFace(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
  if (bytes_.size() < 12) malformed("file too small for an sfnt header");
  std::uint32_t version = u32(0);
  if (version == 0x74746366) {  // 'ttcf': use the first face
    if (u32(8) == 0) malformed("empty font collection");
    base_ = u32(12);
    version = u32(base_);
  }
  if (version == 0x4F54544F) malformed("CFF-flavoured OpenType outlines are not supported");
  if (version != 0x00010000 && version != 0x74727565) malformed("not a TrueType font");

  const std::size_t num_tables = u16(base_ + 4);
  for (std::size_t i = 0; i < num_tables; ++i) {
    const std::size_t rec = base_ + 12 + 16 * i;
    std::array<char, 4> tag{};
    for (int c = 0; c < 4; ++c) tag[c] = static_cast<char>(bytes_.at(rec + c));
    Table t{u32(rec + 8), u32(rec + 12)};
    if (t.offset + t.length > bytes_.size()) malformed("table extends past end of file");
    tables_.emplace_back(tag, t);
  }

  const Table head = require_table("head");
  units_per_em_ = u16(head.offset + 18);
  if (units_per_em_ <= 0) malformed("unitsPerEm must be positive");
  long_loca_ = i16(head.offset + 50) != 0;

  glyph_count_ = u16(require_table("maxp").offset + 4);
  const Table hhea = require_table("hhea");
  descender_ = i16(hhea.offset + 6);
  h_metric_count_ = u16(hhea.offset + 34);
  require_table("hmtx");
  require_table("loca");
  require_table("glyf");

  // Pick a Unicode cmap subtable, preferring full-repertoire format 12.
  const Table cmap = require_table("cmap");
  const std::size_t count = u16(cmap.offset + 2);
  int best_rank = -1;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t rec = cmap.offset + 4 + 8 * i;
    const int platform = u16(rec);
    const int encoding = u16(rec + 2);
    const std::size_t sub = cmap.offset + u32(rec + 4);
    const int format = u16(sub);
    const bool unicode = platform == 0 || (platform == 3 && (encoding == 1 || encoding == 10));
    if (!unicode) continue;
    int rank = -1;
    if (format == 12) rank = 2;
    else if (format == 4) rank = 1;
    if (rank > best_rank) {
      best_rank = rank;
      cmap_subtable_ = sub;
      cmap_format_ = format;
    }
  }
  if (best_rank < 0) malformed("no Unicode cmap subtable in format 4 or 12");
}

FontFace FontFace::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open font file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return FontFace(std::move(bytes));
}

std::uint16_t FontFace::u16(std::size_t at) const {
  if (at + 2 > bytes_.size()) malformed("read past end of file");
  return static_cast<std::uint16_t>((bytes_[at] << 8) | bytes_[at + 1]);
}

std::uint32_t FontFace::u32(std::size_t at) const {
  if (at + 4 > bytes_.size()) malformed("read past end of file");
  return (std::uint32_t{bytes_[at]} << 24) | (std::uint32_t{bytes_[at + 1]} << 16) |
         (std::uint32_t{bytes_[at + 2]} << 8) | std::uint32_t{bytes_[at + 3]};
}

std::optional<FontFace::Table> FontFace::find_table(const char* tag) const {
  for (const auto& [t, table] : tables_) {
    if (std::memcmp(t.data(), tag, 4) == 0) return table;
  }
  return std::nullopt;
}

FontFace::Table FontFace::require_table(const char* tag) const {
  auto t = find_table(tag);
  if (!t) malformed(std::string("missing required table '") + tag + "'");
  return *t;
}

std::optional<std::uint32_t> FontFace::glyph_index(char32_t ch) const {
  const std::uint32_t cp = ch;
  if (cmap_format_ == 12) {
    const std::size_t groups = u32(cmap_subtable_ + 12);
    for (std::size_t i = 0; i < groups; ++i) {
      const std::size_t g = cmap_subtable_ + 16 + 12 * i;
      const std::uint32_t first = u32(g);
      const std::uint32_t last = u32(g + 4);
      if (cp >= first && cp <= last) {
        const std::uint32_t glyph = u32(g + 8) + (cp - first);
        if (glyph == 0 || glyph >= glyph_count_) return std::nullopt;
        return glyph;
      }
    }
    return std::nullopt;
  }
  if (cp > 0xFFFF) return std::nullopt;
  const std::size_t seg_count = u16(cmap_subtable_ + 6) / 2;
  const std::size_t ends = cmap_subtable_ + 14;
  const std::size_t starts = ends + 2 * seg_count + 2;
  const std::size_t deltas = starts + 2 * seg_count;
  const std::size_t range_offsets = deltas + 2 * seg_count;
  for (std::size_t i = 0; i < seg_count; ++i) {
    if (cp > u16(ends + 2 * i)) continue;
    const std::uint32_t start = u16(starts + 2 * i);
    if (cp < start) return std::nullopt;
    const std::uint16_t delta = u16(deltas + 2 * i);
    const std::uint16_t range_offset = u16(range_offsets + 2 * i);
    std::uint32_t glyph;
    if (range_offset == 0) {
      glyph = (cp + delta) & 0xFFFF;
    } else {
      const std::size_t at = range_offsets + 2 * i + range_offset + 2 * (cp - start);
      glyph = u16(at);
      if (glyph != 0) glyph = (glyph + delta) & 0xFFFF;
    }
    if (glyph == 0 || glyph >= glyph_count_) return std::nullopt;
    return glyph;
  }
  return std::nullopt;
}

double FontFace::advance_for_glyph(std::uint32_t glyph) const {
  if (h_metric_count_ == 0) return 0.0;
  const std::size_t idx = glyph < h_metric_count_ ? glyph : h_metric_count_ - 1;
  return u16(require_table("hmtx").offset + 4 * idx);
}

double FontFace::advance_width(char32_t ch) const {
  const auto glyph = glyph_index(ch);
  if (!glyph) throw Error(ErrorCode::MissingGlyph, "no glyph for U+" + std::to_string(std::uint32_t{ch}));
  return advance_for_glyph(*glyph);
}

std::span<const std::uint8_t> FontFace::glyph_data(std::uint32_t glyph) const {
  if (glyph >= glyph_count_) malformed("glyph index out of range");
  const Table loca = require_table("loca");
  const Table glyf = require_table("glyf");
  std::size_t begin, end;
  if (long_loca_) {
    begin = u32(loca.offset + 4 * glyph);
    end = u32(loca.offset + 4 * glyph + 4);
  } else {
    begin = 2 * std::size_t{u16(loca.offset + 2 * glyph)};
    end = 2 * std::size_t{u16(loca.offset + 2 * glyph + 2)};
  }
  if (end < begin || end > glyf.length) malformed("bad loca entry");
  return std::span<const std::uint8_t>(bytes_).subspan(glyf.offset + begin, end - begin);
}

void FontFace::append_contours(std::uint32_t glyph, const std::array<double, 6>& transform, int depth,
                               std::vector<OutlineContour>& out) const {
  if (depth > kMaxCompositeDepth) malformed("composite glyph nesting too deep");
  const auto data = glyph_data(glyph);
  if (data.empty()) return;
  const std::size_t g = static_cast<std::size_t>(data.data() - bytes_.data());
  const std::size_t limit = g + data.size();
  auto check = [&](std::size_t at) {
    if (at > limit) malformed("glyph record truncated");
  };

  const int contour_count = i16(g);
  if (contour_count >= 0) {
    std::vector<std::size_t> end_points(contour_count);
    for (int c = 0; c < contour_count; ++c) end_points[c] = u16(g + 10 + 2 * c);
    if (contour_count == 0) return;
    const std::size_t point_count = end_points.back() + 1;
    std::size_t at = g + 10 + 2 * contour_count;
    at += 2 + u16(at);  // skip instructions

    std::vector<std::uint8_t> flags;
    flags.reserve(point_count);
    while (flags.size() < point_count) {
      check(at + 1);
      const std::uint8_t f = bytes_[at++];
      flags.push_back(f);
      if (f & kRepeat) {
        check(at + 1);
        for (int r = bytes_[at++]; r > 0 && flags.size() < point_count; --r) flags.push_back(f);
      }
    }
    std::vector<RawPoint> points(point_count);
    int x = 0;
    for (std::size_t i = 0; i < point_count; ++i) {
      const std::uint8_t f = flags[i];
      if (f & kXShort) {
        check(at + 1);
        const int d = bytes_[at++];
        x += (f & kXSameOrPositive) ? d : -d;
      } else if (!(f & kXSameOrPositive)) {
        check(at + 2);
        x += i16(at);
        at += 2;
      }
      points[i].p.x = x;
      points[i].on_curve = (f & kOnCurve) != 0;
    }
    int y = 0;
    for (std::size_t i = 0; i < point_count; ++i) {
      const std::uint8_t f = flags[i];
      if (f & kYShort) {
        check(at + 1);
        const int d = bytes_[at++];
        y += (f & kYSameOrPositive) ? d : -d;
      } else if (!(f & kYSameOrPositive)) {
        check(at + 2);
        y += i16(at);
        at += 2;
      }
      points[i].p.y = y;
    }
    for (auto& rp : points) rp.p = apply(transform, rp.p);

    std::size_t first = 0;
    for (int c = 0; c < contour_count; ++c) {
      if (end_points[c] < first || end_points[c] >= point_count) malformed("bad contour end point");
      std::vector<RawPoint> contour(points.begin() + first, points.begin() + end_points[c] + 1);
      first = end_points[c] + 1;
      OutlineContour oc = contour_from_points(contour);
      // Contours that collapse to fewer than two segments enclose no area.
      if (oc.segments.size() >= 2) out.push_back(std::move(oc));
    }
    return;
  }

  // Composite glyph.
  std::size_t at = g + 10;
  std::uint16_t flags;
  do {
    check(at + 4);
    flags = u16(at);
    const std::uint32_t component = u16(at + 2);
    at += 4;
    double dx = 0.0, dy = 0.0;
    if (flags & kArgsAreWords) {
      check(at + 4);
      if (flags & kArgsAreXY) {
        dx = i16(at);
        dy = i16(at + 2);
      }
      at += 4;
    } else {
      check(at + 2);
      if (flags & kArgsAreXY) {
        dx = static_cast<std::int8_t>(bytes_[at]);
        dy = static_cast<std::int8_t>(bytes_[at + 1]);
      }
      at += 2;
    }
    auto f2dot14 = [&](std::size_t p) { return i16(p) / 16384.0; };
    std::array<double, 6> local{1.0, 0.0, 0.0, 1.0, dx, dy};
    if (flags & kHaveScale) {
      check(at + 2);
      local[0] = local[3] = f2dot14(at);
      at += 2;
    } else if (flags & kHaveXYScale) {
      check(at + 4);
      local[0] = f2dot14(at);
      local[3] = f2dot14(at + 2);
      at += 4;
    } else if (flags & kHaveTwoByTwo) {
      check(at + 8);
      local[0] = f2dot14(at);
      local[1] = f2dot14(at + 2);
      local[2] = f2dot14(at + 4);
      local[3] = f2dot14(at + 6);
      at += 8;
    }
    // combined = transform o local
    const std::array<double, 6> combined{
        transform[0] * local[0] + transform[2] * local[1],
        transform[1] * local[0] + transform[3] * local[1],
        transform[0] * local[2] + transform[2] * local[3],
        transform[1] * local[2] + transform[3] * local[3],
        transform[0] * local[4] + transform[2] * local[5] + transform[4],
        transform[1] * local[4] + transform[3] * local[5] + transform[5],
    };
    append_contours(component, combined, depth + 1, out);
  } while (flags & kMoreComponents);
}

GlyphOutline FontFace::outline(char32_t ch) const {
  const auto glyph = glyph_index(ch);
  if (!glyph) throw Error(ErrorCode::MissingGlyph, "no glyph for U+" + std::to_string(std::uint32_t{ch}));
  GlyphOutline outline;
  outline.units_per_em = units_per_em_;
  outline.descender = descender_;
  outline.advance_width = advance_for_glyph(*glyph);
  append_contours(*glyph, {1.0, 0.0, 0.0, 1.0, 0.0, 0.0}, 0, outline.contours);
  if (outline.contours.empty()) {
    throw Error(ErrorCode::EmptyGlyph, "glyph for U+" + std::to_string(std::uint32_t{ch}) + " has no contours");
  }
  return outline;
}

GlyphOutline load_glyph(std::span<const std::uint8_t> font_bytes, char32_t ch) {
  return FontFace(std::vector<std::uint8_t>(font_bytes.begin(), font_bytes.end())).outline(ch);
}

}  // namespace wordasimage
