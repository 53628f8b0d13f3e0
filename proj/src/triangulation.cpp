#include "wordasimage/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <boost/multiprecision/cpp_int.hpp>

#include "wordasimage/error.hpp"
#include "wordasimage/svg.hpp"

namespace wordasimage {

namespace {

using Exact = boost::multiprecision::cpp_rational;

// Adaptive predicates: a double-precision evaluation with a static error
// bound, falling back to exact rationals when the sign is uncertain.
constexpr double kEps = std::numeric_limits<double>::epsilon() / 2.0;
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kInCircleBound = (10.0 + 96.0 * kEps) * kEps;

int sign_of(const Exact& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

int orient(Vec2 a, Vec2 b, Vec2 c) {
  const double l = (a.x - c.x) * (b.y - c.y);
  const double r = (a.y - c.y) * (b.x - c.x);
  const double det = l - r;
  const double bound = kOrientBound * (std::abs(l) + std::abs(r));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  const Exact ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
  return sign_of((ax - cx) * (by - cy) - (ay - cy) * (bx - cx));
}

// Positive when d lies inside the circle through counterclockwise a, b, c.
int in_circle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) +
                     clift * (adx * bdy - ady * bdx);
  const double permanent = alift * (std::abs(bdx * cdy) + std::abs(bdy * cdx)) +
                           blift * (std::abs(cdx * ady) + std::abs(cdy * adx)) +
                           clift * (std::abs(adx * bdy) + std::abs(ady * bdx));
  const double bound = kInCircleBound * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  const Exact eadx = Exact(a.x) - Exact(d.x), eady = Exact(a.y) - Exact(d.y);
  const Exact ebdx = Exact(b.x) - Exact(d.x), ebdy = Exact(b.y) - Exact(d.y);
  const Exact ecdx = Exact(c.x) - Exact(d.x), ecdy = Exact(c.y) - Exact(d.y);
  const Exact ea = eadx * eadx + eady * eady;
  const Exact eb = ebdx * ebdx + ebdy * ebdy;
  const Exact ec = ecdx * ecdx + ecdy * ecdy;
  return sign_of(ea * (ebdx * ecdy - ebdy * ecdx) + eb * (ecdx * eady - ecdy * eadx) +
                 ec * (eadx * ebdy - eady * ebdx));
}

// Closed-segment intersection, including touching and collinear overlap.
bool segments_touch(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orient(p1, p2, q1);
  const int o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1);
  const int o4 = orient(q1, q2, p2);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  auto on_segment = [](Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
  };
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) { return (std::uint64_t{a} << 32) | b; }
std::uint64_t undirected_key(std::uint32_t a, std::uint32_t b) { return a < b ? edge_key(a, b) : edge_key(b, a); }

// Triangle soup with a directed-edge index. Every stored triangle is
// counterclockwise, so each directed edge has at most one owner.
class Mesh {
 public:
  explicit Mesh(std::vector<Vec2> points) : points_(std::move(points)) {}

  const std::vector<Vec2>& points() const { return points_; }
  Vec2 point(std::uint32_t i) const { return points_[i]; }

  int add(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    if (orient(points_[a], points_[b], points_[c]) < 0) std::swap(b, c);
    const int id = static_cast<int>(tris_.size());
    tris_.push_back({{a, b, c}, true});
    owner_[edge_key(a, b)] = id;
    owner_[edge_key(b, c)] = id;
    owner_[edge_key(c, a)] = id;
    return id;
  }

  void remove(int t) {
    auto& tri = tris_[t];
    if (!tri.alive) return;
    tri.alive = false;
    for (int s = 0; s < 3; ++s) {
      const auto key = edge_key(tri.v[s], tri.v[(s + 1) % 3]);
      if (auto it = owner_.find(key); it != owner_.end() && it->second == t) owner_.erase(it);
    }
  }

  std::optional<int> owner(std::uint32_t a, std::uint32_t b) const {
    if (auto it = owner_.find(edge_key(a, b)); it != owner_.end()) return it->second;
    return std::nullopt;
  }

  bool alive(int t) const { return tris_[t].alive; }
  const std::array<std::uint32_t, 3>& vertices(int t) const { return tris_[t].v; }
  int size() const { return static_cast<int>(tris_.size()); }

  bool has_edge(std::uint32_t a, std::uint32_t b) const { return owner(a, b) || owner(b, a); }

  // Bowyer-Watson insertion of an existing point index.
  void insert(std::uint32_t p) {
    const Vec2 pt = points_[p];
    int seed = -1;
    for (int t = 0; t < size() && seed < 0; ++t) {
      if (!tris_[t].alive) continue;
      const auto& v = tris_[t].v;
      if (orient(points_[v[0]], points_[v[1]], pt) >= 0 && orient(points_[v[1]], points_[v[2]], pt) >= 0 &&
          orient(points_[v[2]], points_[v[0]], pt) >= 0) {
        seed = t;
      }
    }
    if (seed < 0) throw Error(ErrorCode::DegenerateGeometry, "point outside the bounding triangle");

    std::vector<int> cavity{seed};
    std::unordered_set<int> in_cavity{seed};
    for (std::size_t i = 0; i < cavity.size(); ++i) {
      const auto v = tris_[cavity[i]].v;
      for (int s = 0; s < 3; ++s) {
        const auto n = owner(v[(s + 1) % 3], v[s]);
        if (!n || in_cavity.count(*n)) continue;
        const auto& w = tris_[*n].v;
        if (in_circle(points_[w[0]], points_[w[1]], points_[w[2]], pt) > 0) {
          in_cavity.insert(*n);
          cavity.push_back(*n);
        }
      }
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> boundary;
    for (int t : cavity) {
      const auto v = tris_[t].v;
      for (int s = 0; s < 3; ++s) {
        const auto n = owner(v[(s + 1) % 3], v[s]);
        if (!n || !in_cavity.count(*n)) boundary.emplace_back(v[s], v[(s + 1) % 3]);
      }
    }
    for (int t : cavity) remove(t);
    for (auto [a, b] : boundary) add(a, b, p);
  }

  // Forces edge (a, b) into the mesh by removing every triangle it crosses and
  // retriangulating the two pseudo-polygons on either side.
  void insert_constraint(std::uint32_t a, std::uint32_t b) {
    if (has_edge(a, b)) return;
    const Vec2 pa = points_[a], pb = points_[b];

    int current = -1;
    std::uint32_t left = 0, right = 0;
    for (int t = 0; t < size() && current < 0; ++t) {
      if (!tris_[t].alive) continue;
      const auto& v = tris_[t].v;
      for (int s = 0; s < 3; ++s) {
        if (v[s] != a) continue;
        const std::uint32_t u = v[(s + 1) % 3], w = v[(s + 2) % 3];
        const int ou = orient(pa, pb, points_[u]);
        const int ow = orient(pa, pb, points_[w]);
        if (ou * ow < 0 && orient(points_[u], points_[w], pb) < 0) {
          current = t;
          left = ou > 0 ? u : w;
          right = ou > 0 ? w : u;
        }
      }
    }
    if (current < 0) throw Error(ErrorCode::SelfIntersecting, "could not trace constraint edge through the mesh");

    std::vector<std::uint32_t> left_chain{left}, right_chain{right};
    std::vector<int> crossed{current};
    while (true) {
      // Step across edge {left, right}, whichever direction `current` owns it.
      const auto forward = owner(left, right);
      const std::optional<int> next = (forward && *forward == current) ? owner(right, left) : owner(left, right);
      if (!next) throw Error(ErrorCode::SelfIntersecting, "constraint edge leaves the mesh");
      current = *next;
      crossed.push_back(current);
      const auto& v = tris_[current].v;
      std::uint32_t third = v[0];
      for (auto x : v) {
        if (x != left && x != right) third = x;
      }
      if (third == b) break;
      const int o = orient(pa, pb, points_[third]);
      if (o == 0) throw Error(ErrorCode::SelfIntersecting, "a vertex lies on a constraint edge");
      if (o > 0) {
        left = third;
        left_chain.push_back(third);
      } else {
        right = third;
        right_chain.push_back(third);
      }
    }
    for (int t : crossed) remove(t);
    fill_pseudo_polygon(a, b, left_chain);
    fill_pseudo_polygon(a, b, right_chain);
  }

  // Restores the constrained Delaunay property by flipping unconstrained
  // edges that fail the in-circle test.
  void legalize(const std::unordered_set<std::uint64_t>& constrained) {
    bool flipped = true;
    int guard = 0;
    while (flipped && guard++ < 1000) {
      flipped = false;
      for (int t = 0; t < size(); ++t) {
        if (!tris_[t].alive) continue;
        const auto v = tris_[t].v;
        for (int s = 0; s < 3; ++s) {
          const std::uint32_t a = v[s], b = v[(s + 1) % 3], c = v[(s + 2) % 3];
          if (constrained.count(undirected_key(a, b))) continue;
          const auto n = owner(b, a);
          if (!n) continue;
          std::uint32_t d = 0;
          for (auto x : tris_[*n].v) {
            if (x != a && x != b) d = x;
          }
          if (in_circle(points_[a], points_[b], points_[c], points_[d]) <= 0) continue;
          if (orient(points_[c], points_[d], points_[b]) * orient(points_[c], points_[d], points_[a]) >= 0) continue;
          remove(t);
          remove(*n);
          add(c, a, d);
          add(c, d, b);
          flipped = true;
          break;
        }
      }
    }
  }

 private:
  struct Tri {
    std::array<std::uint32_t, 3> v;
    bool alive;
  };

  void fill_pseudo_polygon(std::uint32_t a, std::uint32_t b, const std::vector<std::uint32_t>& chain) {
    if (chain.empty()) return;
    std::size_t pick = 0;
    for (std::size_t i = 1; i < chain.size(); ++i) {
      const std::uint32_t c = chain[pick];
      Vec2 pa = points_[a], pb = points_[b], pc = points_[c];
      if (orient(pa, pb, pc) < 0) std::swap(pa, pb);
      if (in_circle(pa, pb, pc, points_[chain[i]]) > 0) pick = i;
    }
    const std::uint32_t c = chain[pick];
    fill_pseudo_polygon(a, c, {chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(pick)});
    fill_pseudo_polygon(c, b, {chain.begin() + static_cast<std::ptrdiff_t>(pick) + 1, chain.end()});
    add(a, b, c);
  }

  std::vector<Vec2> points_;
  std::vector<Tri> tris_;
  std::unordered_map<std::uint64_t, int> owner_;
};

}  // namespace

std::uint64_t snapshot_hash(std::span<const Vec2> points) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const Vec2& p : points) {
    for (double c : {p.x, p.y}) {
      std::uint64_t bits;
      std::memcpy(&bits, &c, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xFF;
        h *= 0x100000001b3ull;
      }
    }
  }
  return h;
}

Triangulation triangulate_polygons(std::span<const Vec2> points,
                                   const std::vector<std::vector<std::uint32_t>>& rings) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::DegenerateGeometry, "need at least three points");
  for (const Vec2& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorCode::NonFiniteCoordinate, "non-finite point");
  }

  // Duplicate check on x-sorted order.
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto l, auto r) {
    return points[l].x < points[r].x || (points[l].x == points[r].x && points[l].y < points[r].y);
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n && points[order[j]].x - points[order[i]].x < 1e-9; ++j) {
      if (distance(points[order[i]], points[order[j]]) < 1e-9) {
        throw Error(ErrorCode::DegenerateGeometry, "points " + std::to_string(order[i]) + " and " +
                                                       std::to_string(order[j]) + " coincide");
      }
    }
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& ring : rings) {
    if (ring.size() < 3) throw Error(ErrorCode::DegenerateGeometry, "ring with fewer than three points");
    for (std::size_t i = 0; i < ring.size(); ++i) {
      if (ring[i] >= n) throw Error(ErrorCode::InvalidArgument, "ring index out of range");
      edges.emplace_back(ring[i], ring[(i + 1) % ring.size()]);
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const auto [a, b] = edges[i];
      const auto [c, d] = edges[j];
      const bool shares = a == c || a == d || b == c || b == d;
      bool bad;
      if (shares) {
        // Adjacent edges may only meet at their shared vertex.
        const std::uint32_t shared = (a == c || a == d) ? a : b;
        const std::uint32_t p = a == shared ? b : a;
        const std::uint32_t q = c == shared ? d : c;
        const Vec2 s = points[shared];
        bad = p == q || (orient(s, points[p], points[q]) == 0 && dot(points[p] - s, points[q] - s) > 0.0);
      } else {
        bad = segments_touch(points[a], points[b], points[c], points[d]);
      }
      if (bad) {
        throw Error(ErrorCode::SelfIntersecting, "constraint edges (" + std::to_string(a) + "," + std::to_string(b) +
                                                     ") and (" + std::to_string(c) + "," + std::to_string(d) +
                                                     ") intersect");
      }
    }
  }

  double min_x = points[0].x, max_x = min_x, min_y = points[0].y, max_y = min_y;
  for (const Vec2& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double span = std::max(max_x - min_x, max_y - min_y) + 1.0;
  const Vec2 center{0.5 * (min_x + max_x), 0.5 * (min_y + max_y)};
  std::vector<Vec2> all(points.begin(), points.end());
  const auto super0 = static_cast<std::uint32_t>(n);
  all.push_back({center.x - 40.0 * span, center.y - 20.0 * span});
  all.push_back({center.x + 40.0 * span, center.y - 20.0 * span});
  all.push_back({center.x, center.y + 40.0 * span});

  Mesh mesh(std::move(all));
  mesh.add(super0, super0 + 1, super0 + 2);
  for (std::uint32_t i : order) mesh.insert(i);

  std::unordered_set<std::uint64_t> constrained;
  for (const auto& [a, b] : edges) {
    mesh.insert_constraint(a, b);
    constrained.insert(undirected_key(a, b));
  }
  mesh.legalize(constrained);

  Triangulation tri;
  tri.point_count = n;
  tri.built_from = snapshot_hash(points);
  tri.vertex_angles.resize(n);
  std::vector<std::vector<Vec2>> polygons;
  for (const auto& ring : rings) {
    std::vector<Vec2> poly;
    for (auto i : ring) poly.push_back(points[i]);
    polygons.push_back(std::move(poly));
  }
  for (int t = 0; t < mesh.size(); ++t) {
    if (!mesh.alive(t)) continue;
    const auto v = mesh.vertices(t);
    if (v[0] >= n || v[1] >= n || v[2] >= n) continue;
    const Vec2 a = points[v[0]], b = points[v[1]], c = points[v[2]];
    if (0.5 * cross(b - a, c - a) <= 1e-12) continue;
    const Vec2 centroid = (1.0 / 3.0) * (a + b + c);
    int winding = 0;
    for (const auto& poly : polygons) winding += winding_number(poly, centroid);
    if (winding == 0) continue;
    const auto id = static_cast<std::uint32_t>(tri.triangles.size());
    tri.triangles.push_back(v);
    for (std::uint8_t s = 0; s < 3; ++s) tri.vertex_angles[v[s]].push_back({id, s});
  }
  return tri;
}

Triangulation triangulate_interior(const GlyphPath& path) {
  path.validate();
  std::vector<std::vector<std::uint32_t>> rings;
  for (const Subpath& s : path.subpaths) {
    std::vector<std::uint32_t> ring(s.point_count());
    for (std::size_t i = 0; i < ring.size(); ++i) ring[i] = static_cast<std::uint32_t>(s.first_point + i);
    rings.push_back(std::move(ring));
  }
  return triangulate_polygons(path.points, rings);
}

namespace {

constexpr double kMinEdge = 1e-12;

struct CornerGeometry {
  double angle;
  Vec2 d_prev;  // d angle / d (first neighbour)
  Vec2 d_next;  // d angle / d (second neighbour)
  bool degenerate;
};

CornerGeometry corner(Vec2 apex, Vec2 p1, Vec2 p2) {
  const Vec2 e1 = p1 - apex;
  const Vec2 e2 = p2 - apex;
  const double c = cross(e1, e2);
  const double d = dot(e1, e2);
  const double l1 = norm(e1), l2 = norm(e2);
  const bool degenerate = l1 < kMinEdge || l2 < kMinEdge;
  const double denom = std::pow(std::max(l1, kMinEdge), 2) * std::pow(std::max(l2, kMinEdge), 2);
  // theta = atan2(c, d); d theta = (d dc - c dd) / (c^2 + d^2)
  const Vec2 dc_de1{e2.y, -e2.x}, dc_de2{-e1.y, e1.x};
  const Vec2 g1 = (1.0 / denom) * (d * dc_de1 - c * e2);
  const Vec2 g2 = (1.0 / denom) * (d * dc_de2 - c * e1);
  return {std::atan2(c, d), g1, g2, degenerate};
}

}  // namespace

CornerAngles corner_angles(std::span<const Vec2> points, const Triangulation& tri) {
  if (points.size() != tri.point_count) throw Error(ErrorCode::SizeMismatch, "point count differs from triangulation");
  CornerAngles out;
  out.angles.resize(3 * tri.triangles.size());
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    const auto& v = tri.triangles[t];
    for (int s = 0; s < 3; ++s) {
      const auto g = corner(points[v[s]], points[v[(s + 1) % 3]], points[v[(s + 2) % 3]]);
      out.angles[3 * t + s] = g.angle;
      out.degenerate = out.degenerate || g.degenerate;
    }
  }
  return out;
}

AcapResult acap_loss(std::span<const Vec2> original, std::span<const Vec2> deformed, const Triangulation& tri) {
  if (original.size() != tri.point_count || deformed.size() != tri.point_count) {
    throw Error(ErrorCode::SizeMismatch, "point sets must match the triangulation size");
  }
  if (snapshot_hash(original) != tri.built_from) {
    throw Error(ErrorCode::InvalidArgument, "triangulation was built on a different point set");
  }
  const auto reference = corner_angles(original, tri);
  AcapResult out;
  out.grad.assign(deformed.size(), Vec2{});
  const double inv_k = 1.0 / static_cast<double>(tri.point_count);
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    const auto& v = tri.triangles[t];
    for (int s = 0; s < 3; ++s) {
      const std::uint32_t apex = v[s], p1 = v[(s + 1) % 3], p2 = v[(s + 2) % 3];
      const auto g = corner(deformed[apex], deformed[p1], deformed[p2]);
      out.degenerate = out.degenerate || g.degenerate;
      const double diff = g.angle - reference.angles[3 * t + s];
      out.loss += inv_k * diff * diff;
      const double w = 2.0 * inv_k * diff;
      out.grad[p1] += w * g.d_prev;
      out.grad[p2] += w * g.d_next;
      out.grad[apex] -= w * (g.d_prev + g.d_next);
    }
  }
  return out;
}

std::string triangulation_svg(const GlyphPath& path, const Triangulation& tri) {
  std::ostringstream svg;
  svg << svg_header(1.0, 1.0);
  svg << "<path d=\"";
  for (std::size_t s = 0; s < path.subpaths.size(); ++s) svg << svg_subpath_data(path, s, {0.0, 0.0});
  svg << "\" fill=\"#d0d0d0\" fill-rule=\"nonzero\"/>\n";
  svg << "<g fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"0.002\">\n";
  for (const auto& v : tri.triangles) {
    svg << "<polygon points=\"";
    for (int s = 0; s < 3; ++s) {
      const Vec2 p = path.points[v[s]];
      svg << format_coordinate(p.x) << ',' << format_coordinate(1.0 - p.y) << (s < 2 ? " " : "");
    }
    svg << "\"/>\n";
  }
  svg << "</g>\n<g fill=\"#d62728\">\n";
  for (const Vec2& p : path.points) {
    svg << "<circle cx=\"" << format_coordinate(p.x) << "\" cy=\"" << format_coordinate(1.0 - p.y)
        << "\" r=\"0.004\"/>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace wordasimage
