#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "wordasimage/geometry.hpp"
#include "wordasimage/glyph_path.hpp"

namespace wordasimage {

/// Fixed 12-significant-digit formatting used for every SVG coordinate, so
/// that export -> parse -> export reproduces the same bytes.
std::string format_coordinate(double v);

std::string svg_header(double width, double height, std::string_view extra_attributes = {});

/// "M x y C ... Z" for one subpath, y flipped so the em box maps onto the
/// SVG viewBox, shifted by `offset` (em units).
std::string svg_subpath_data(const GlyphPath& path, std::size_t subpath, Vec2 offset);

/// One <path> element per subpath, fill black, nonzero rule, viewBox = em box.
std::string export_svg(const GlyphPath& path);
void write_svg(const GlyphPath& path, const std::filesystem::path& out);

/// Parses documents produced by export_svg (absolute M/C/Z only).
GlyphPath parse_svg(std::string_view svg);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace wordasimage
