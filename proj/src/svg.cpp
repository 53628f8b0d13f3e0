#include "wordasimage/svg.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "wordasimage/error.hpp"

namespace wordasimage {

namespace {

std::string escape_xml(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_xml(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    const auto end = text.find(';', i);
    const auto entity = text.substr(i, end - i + 1);
    if (entity == "&amp;") out.push_back('&');
    else if (entity == "&lt;") out.push_back('<');
    else if (entity == "&gt;") out.push_back('>');
    else if (entity == "&quot;") out.push_back('"');
    else throw Error(ErrorCode::InvalidPath, "unknown XML entity");
    i = end;
  }
  return out;
}

std::optional<std::string> attribute(std::string_view element, std::string_view name) {
  const std::string key = " " + std::string(name) + "=\"";
  const auto at = element.find(key);
  if (at == std::string_view::npos) return std::nullopt;
  const auto begin = at + key.size();
  const auto end = element.find('"', begin);
  if (end == std::string_view::npos) throw Error(ErrorCode::InvalidPath, "unterminated attribute");
  return unescape_xml(element.substr(begin, end - begin));
}

}  // namespace

std::string format_coordinate(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string svg_header(double width, double height, std::string_view extra_attributes) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << format_coordinate(width) << ' '
      << format_coordinate(height) << "\" width=\"" << format_coordinate(512.0 * width) << "\" height=\""
      << format_coordinate(512.0 * height) << '"' << extra_attributes << ">\n";
  return out.str();
}

std::string svg_subpath_data(const GlyphPath& path, std::size_t subpath, Vec2 offset) {
  std::ostringstream d;
  auto emit = [&](Vec2 p) { d << format_coordinate(p.x + offset.x) << ' ' << format_coordinate(1.0 - p.y + offset.y); };
  const std::size_t segments = path.subpaths.at(subpath).segment_count;
  d << "M ";
  emit(path.segment(subpath, 0)[0]);
  for (std::size_t k = 0; k < segments; ++k) {
    const Cubic c = path.segment(subpath, k);
    d << " C ";
    emit(c[1]);
    d << ' ';
    emit(c[2]);
    d << ' ';
    emit(c[3]);
  }
  d << " Z";
  return d.str();
}

std::string export_svg(const GlyphPath& path) {
  path.validate();
  const std::string extra = " data-letter=\"" + escape_xml(path.letter) + "\" data-font-id=\"" +
                            escape_xml(path.font_id) + "\" data-advance=\"" + format_coordinate(path.advance) + "\"";
  std::string svg = svg_header(1.0, 1.0, extra);
  for (std::size_t s = 0; s < path.subpaths.size(); ++s) {
    svg += "<path d=\"" + svg_subpath_data(path, s, {0.0, 0.0}) + "\" fill=\"black\" fill-rule=\"nonzero\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_svg(const GlyphPath& path, const std::filesystem::path& out) { write_text_file(out, export_svg(path)); }

GlyphPath parse_svg(std::string_view svg) {
  const auto root_at = svg.find("<svg");
  if (root_at == std::string_view::npos) throw Error(ErrorCode::InvalidPath, "no <svg> element");
  const std::string_view root = svg.substr(root_at, svg.find('>', root_at) - root_at);
  GlyphPath path;
  path.letter = attribute(root, "data-letter").value_or("");
  path.font_id = attribute(root, "data-font-id").value_or("");
  if (auto adv = attribute(root, "data-advance")) path.advance = std::strtod(adv->c_str(), nullptr);

  std::size_t at = 0;
  while ((at = svg.find("<path", at)) != std::string_view::npos) {
    const auto end = svg.find('>', at);
    const auto d = attribute(svg.substr(at, end - at), "d");
    at = end;
    if (!d) throw Error(ErrorCode::InvalidPath, "<path> without d attribute");

    std::istringstream in(*d);
    std::string cmd;
    auto read_point = [&]() {
      Vec2 p;
      if (!(in >> p.x >> p.y)) throw Error(ErrorCode::InvalidPath, "bad coordinate in path data");
      p.y = 1.0 - p.y;
      return p;
    };
    if (!(in >> cmd) || cmd != "M") throw Error(ErrorCode::InvalidPath, "path data must start with M");
    const Vec2 start = read_point();
    std::vector<Vec2> pts{start};
    bool closed = false;
    while (in >> cmd) {
      if (cmd == "Z") {
        closed = true;
        break;
      }
      if (cmd != "C") throw Error(ErrorCode::InvalidPath, "only absolute C commands are supported");
      pts.push_back(read_point());
      pts.push_back(read_point());
      pts.push_back(read_point());
    }
    if (!closed || pts.size() < 7 || distance(pts.back(), start) > 1e-9) {
      throw Error(ErrorCode::InvalidPath, "subpath is not closed");
    }
    pts.pop_back();
    path.subpaths.push_back({path.points.size(), pts.size() / 3});
    path.points.insert(path.points.end(), pts.begin(), pts.end());
  }
  path.validate();
  return path;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace wordasimage
