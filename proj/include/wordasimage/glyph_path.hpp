#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordasimage/font.hpp"
#include "wordasimage/geometry.hpp"

namespace wordasimage {

/// One closed run of cubic segments. Its 3n points are stored contiguously
/// starting at `first_point`; segment s uses points 3s, 3s+1, 3s+2 and
/// 3s+3 (mod 3n), so neighbouring segments share their endpoint.
struct Subpath {
  std::size_t first_point = 0;
  std::size_t segment_count = 0;

  std::size_t point_count() const { return 3 * segment_count; }
};

/// Closed cubic Bezier outline in em-normalized units (y-up). `points` is
/// the optimization variable.
struct GlyphPath {
  std::vector<Vec2> points;
  std::vector<Subpath> subpaths;
  std::string letter;
  std::string font_id;
  double advance = 0.0;  // em units

  std::size_t segment_count() const;
  std::array<std::size_t, 4> segment_indices(std::size_t subpath, std::size_t segment) const;
  Cubic segment(std::size_t subpath, std::size_t segment) const;

  /// The control polygon of one subpath (its points in order).
  std::vector<Vec2> control_polygon(std::size_t subpath) const;

  /// Throws InvalidPath if the subpath table does not tile `points`.
  void validate() const;
};

/// Degree-elevates every segment to a cubic and maps the em box to [0,1]^2.
GlyphPath to_cubics(const GlyphOutline& outline, std::string letter = {}, std::string font_id = {});

struct SubdivisionResult {
  GlyphPath path;
  bool target_unreachable = false;  // target was below the starting count
  int iterations = 0;
};

/// Repeatedly splits every segment whose arc length ties the current maximum
/// (relative 1e-9) at t = 0.5 until the point count reaches `target`.
SubdivisionResult subdivide_to_target(const GlyphPath& path, std::size_t target);

/// Per-letter control-point targets shared across fonts.
struct SubdivisionTargets {
  std::size_t uppercase = 26;
  std::size_t lowercase = 24;
  std::size_t other = 24;
  std::map<std::string, std::size_t> overrides;  // keyed by UTF-8 letter

  std::size_t target_for(const std::string& letter) const;
};

GlyphPath translated(const GlyphPath& path, Vec2 offset);

nlohmann::json to_json(const GlyphPath& path);
GlyphPath glyph_path_from_json(const nlohmann::json& doc);

}  // namespace wordasimage
