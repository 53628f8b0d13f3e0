#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wordasimage/geometry.hpp"
#include "wordasimage/glyph_path.hpp"

namespace wordasimage {

struct CornerRef {
  std::uint32_t triangle = 0;
  std::uint8_t slot = 0;  // corner at triangles[triangle][slot]
};

/// Fixed connectivity over a control-point set. Built once from the
/// undeformed letter and reused for every deformed configuration.
struct Triangulation {
  std::vector<std::array<std::uint32_t, 3>> triangles;  // counterclockwise at construction
  std::vector<std::vector<CornerRef>> vertex_angles;     // per point j: its incident corners
  std::uint64_t built_from = 0;                          // snapshot_hash of the construction points
  std::size_t point_count = 0;
};

std::uint64_t snapshot_hash(std::span<const Vec2> points);

/// Constrained Delaunay triangulation of the region enclosed (nonzero
/// winding) by closed polygons. `rings` index into `points`; every
/// consecutive pair of a ring is a constraint edge. Triangles whose centroid
/// has zero winding are discarded.
///
/// Throws DegenerateGeometry for points closer than 1e-9 and
/// SelfIntersecting when two constraint edges cross or touch.
Triangulation triangulate_polygons(std::span<const Vec2> points,
                                   const std::vector<std::vector<std::uint32_t>>& rings);

/// Triangulates a glyph's interior using its control polygons as constraints.
Triangulation triangulate_interior(const GlyphPath& path);

struct CornerAngles {
  std::vector<double> angles;  // indexed by 3 * triangle + slot, radians
  bool degenerate = false;     // some edge was shorter than 1e-12
};

/// Signed corner angles (atan2 of the two edge vectors). Counterclockwise
/// triangles give angles in (0, pi); flipped triangles give negative ones.
CornerAngles corner_angles(std::span<const Vec2> points, const Triangulation& tri);

struct AcapResult {
  double loss = 0.0;
  std::vector<Vec2> grad;  // d loss / d P_hat
  bool degenerate = false;
};

/// Mean over points of the summed squared differences between corresponding
/// corner angles of `original` and `deformed`.
AcapResult acap_loss(std::span<const Vec2> original, std::span<const Vec2> deformed, const Triangulation& tri);

/// Debug overlay: filled glyph with the triangle edges stroked on top.
std::string triangulation_svg(const GlyphPath& path, const Triangulation& tri);

}  // namespace wordasimage
