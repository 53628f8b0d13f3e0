#include "wordasimage/glyph_path.hpp"

#include <algorithm>
#include <cmath>

#include "wordasimage/error.hpp"
#include "wordasimage/utf8.hpp"

namespace wordasimage {

std::size_t GlyphPath::segment_count() const {
  std::size_t n = 0;
  for (const Subpath& s : subpaths) n += s.segment_count;
  return n;
}

std::array<std::size_t, 4> GlyphPath::segment_indices(std::size_t subpath, std::size_t segment) const {
  const Subpath& s = subpaths.at(subpath);
  const std::size_t n = s.point_count();
  const std::size_t base = 3 * segment;
  return {s.first_point + base, s.first_point + base + 1, s.first_point + base + 2,
          s.first_point + (base + 3) % n};
}

Cubic GlyphPath::segment(std::size_t subpath, std::size_t segment) const {
  const auto idx = segment_indices(subpath, segment);
  return {points[idx[0]], points[idx[1]], points[idx[2]], points[idx[3]]};
}

std::vector<Vec2> GlyphPath::control_polygon(std::size_t subpath) const {
  const Subpath& s = subpaths.at(subpath);
  return {points.begin() + static_cast<std::ptrdiff_t>(s.first_point),
          points.begin() + static_cast<std::ptrdiff_t>(s.first_point + s.point_count())};
}

void GlyphPath::validate() const {
  std::size_t expected = 0;
  for (const Subpath& s : subpaths) {
    if (s.first_point != expected) throw Error(ErrorCode::InvalidPath, "subpaths must tile the point list");
    if (s.segment_count < 1) throw Error(ErrorCode::InvalidPath, "subpath without segments");
    expected += s.point_count();
  }
  if (expected != points.size()) throw Error(ErrorCode::InvalidPath, "point count does not match subpath table");
  if (points.empty()) throw Error(ErrorCode::InvalidPath, "empty path");
}

GlyphPath to_cubics(const GlyphOutline& outline, std::string letter, std::string font_id) {
  if (outline.units_per_em <= 0) throw Error(ErrorCode::InvalidPath, "units_per_em must be positive");
  const double inv = 1.0 / outline.units_per_em;
  const auto normalize = [&](Vec2 p) { return Vec2{p.x * inv, (p.y - outline.descender) * inv}; };

  GlyphPath path;
  path.letter = std::move(letter);
  path.font_id = std::move(font_id);
  path.advance = outline.advance_width * inv;
  for (const OutlineContour& contour : outline.contours) {
    if (contour.segments.size() < 2) throw Error(ErrorCode::InvalidPath, "contour with fewer than two segments");
    Subpath sub{path.points.size(), contour.segments.size()};
    for (std::size_t i = 0; i < contour.segments.size(); ++i) {
      const OutlineSegment& seg = contour.segments[i];
      const OutlineSegment& next = contour.segments[(i + 1) % contour.segments.size()];
      if (seg.end() != next.start()) throw Error(ErrorCode::InvalidPath, "contour is not closed");
      Cubic c;
      switch (seg.kind) {
        case SegmentKind::Line: c = elevate_line(seg.points[0], seg.points[1]); break;
        case SegmentKind::Quadratic: c = elevate_quadratic(seg.points[0], seg.points[1], seg.points[2]); break;
        case SegmentKind::Cubic: c = {seg.points[0], seg.points[1], seg.points[2], seg.points[3]}; break;
      }
      path.points.push_back(normalize(c[0]));
      path.points.push_back(normalize(c[1]));
      path.points.push_back(normalize(c[2]));
    }
    path.subpaths.push_back(sub);
  }
  path.validate();
  return path;
}

SubdivisionResult subdivide_to_target(const GlyphPath& input, std::size_t target) {
  input.validate();
  SubdivisionResult result{input, target < input.points.size(), 0};
  GlyphPath& path = result.path;

  while (path.points.size() < target) {
    std::vector<std::vector<double>> lengths(path.subpaths.size());
    double longest = 0.0;
    for (std::size_t s = 0; s < path.subpaths.size(); ++s) {
      for (std::size_t k = 0; k < path.subpaths[s].segment_count; ++k) {
        lengths[s].push_back(arc_length(path.segment(s, k)));
        longest = std::max(longest, lengths[s].back());
      }
    }
    const double threshold = longest * (1.0 - 1e-9);

    GlyphPath next;
    next.letter = path.letter;
    next.font_id = path.font_id;
    next.advance = path.advance;
    for (std::size_t s = 0; s < path.subpaths.size(); ++s) {
      Subpath sub{next.points.size(), 0};
      for (std::size_t k = 0; k < path.subpaths[s].segment_count; ++k) {
        const Cubic c = path.segment(s, k);
        if (lengths[s][k] >= threshold) {
          const auto [left, right] = split(c, 0.5);
          next.points.insert(next.points.end(), {left[0], left[1], left[2], right[0], right[1], right[2]});
          sub.segment_count += 2;
        } else {
          next.points.insert(next.points.end(), {c[0], c[1], c[2]});
          sub.segment_count += 1;
        }
      }
      next.subpaths.push_back(sub);
    }
    path = std::move(next);
    ++result.iterations;
  }
  return result;
}

std::size_t SubdivisionTargets::target_for(const std::string& letter) const {
  if (auto it = overrides.find(letter); it != overrides.end()) return it->second;
  const auto cps = decode_utf8(letter);
  if (cps.size() == 1 && cps[0] < 128) {
    const char c = static_cast<char>(cps[0]);
    if (c >= 'A' && c <= 'Z') return uppercase;
    if (c >= 'a' && c <= 'z') return lowercase;
  }
  return other;
}

GlyphPath translated(const GlyphPath& path, Vec2 offset) {
  GlyphPath out = path;
  for (Vec2& p : out.points) p += offset;
  return out;
}

nlohmann::json to_json(const GlyphPath& path) {
  nlohmann::json subpaths = nlohmann::json::array();
  for (std::size_t s = 0; s < path.subpaths.size(); ++s) {
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t k = 0; k < path.subpaths[s].segment_count; ++k) {
      for (const Vec2& p : path.segment(s, k)) points.push_back({p.x, p.y});
    }
    subpaths.push_back({{"points", std::move(points)}});
  }
  return {{"letter", path.letter}, {"font_id", path.font_id}, {"advance", path.advance}, {"subpaths", subpaths}};
}

GlyphPath glyph_path_from_json(const nlohmann::json& doc) {
  constexpr double kTolerance = 1e-9;
  GlyphPath path;
  try {
    path.letter = doc.at("letter").get<std::string>();
    path.font_id = doc.at("font_id").get<std::string>();
    path.advance = doc.value("advance", 0.0);
    for (const auto& sub : doc.at("subpaths")) {
      const auto& pts = sub.at("points");
      if (pts.size() < 8 || pts.size() % 4 != 0) {
        throw Error(ErrorCode::InvalidPath, "subpath points must be 4 per segment, at least 2 segments");
      }
      const std::size_t segments = pts.size() / 4;
      auto at = [&](std::size_t i) { return Vec2{pts[i].at(0).get<double>(), pts[i].at(1).get<double>()}; };
      Subpath s{path.points.size(), segments};
      for (std::size_t k = 0; k < segments; ++k) {
        const Vec2 end = at(4 * k + 3);
        const Vec2 next_start = at((4 * k + 4) % pts.size());
        if (distance(end, next_start) > kTolerance) {
          throw Error(ErrorCode::InvalidPath, "segment endpoints do not join (subpath not closed)");
        }
        path.points.push_back(at(4 * k));
        path.points.push_back(at(4 * k + 1));
        path.points.push_back(at(4 * k + 2));
      }
      path.subpaths.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidPath, std::string("malformed glyph path document: ") + e.what());
  }
  path.validate();
  return path;
}

}  // namespace wordasimage
