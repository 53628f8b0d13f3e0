#include "wordasimage/raster.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "wordasimage/error.hpp"

namespace wordasimage {

namespace {

// Forward-mode number carrying derivatives with respect to the four
// endpoint coordinates of one polygon edge.
struct Dual {
  double v = 0.0;
  std::array<double, 4> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly
  Dual(double value, int seed) : v(value) { d[seed] = 1.0; }
};

Dual operator+(const Dual& a, const Dual& b) {
  Dual r(a.v + b.v);
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  const double inv = 1.0 / (b.v * b.v);
  for (int i = 0; i < 4; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv;
  return r;
}

double value(double x) { return x; }
double value(const Dual& x) { return x.v; }

// Ties keep `v` so its derivative survives when it sits exactly on a bound.
template <class T>
T at_most(const T& v, double bound) {
  return value(v) > bound ? T(bound) : v;
}
template <class T>
T at_least(const T& v, double bound) {
  return value(v) < bound ? T(bound) : v;
}

// Signed-area accumulation for one edge already clipped to 0 <= x <= width.
// Each cell receives the area of its part of the row slab lying right of the
// edge; a running sum along the row then yields signed coverage.
template <class T, class Sink>
void accumulate_edge(T x0, T y0, T x1, T y1, int width, int height, Sink&& sink) {
  // A flat edge adds no area, but in the tangent pass its endpoints' y still
  // move it off the horizontal, so it is kept there.
  const bool flat = value(y0) == value(y1);
  if (flat && std::is_same_v<T, double>) return;
  double dir = 1.0;
  if (value(y0) > value(y1)) {
    std::swap(x0, x1);
    std::swap(y0, y1);
    dir = -1.0;
  }
  if (value(y1) <= 0.0 || value(y0) >= height) return;
  const T dxdy = flat ? T(0.0) : (x1 - x0) / (y1 - y0);
  const T ystart = at_least(y0, 0.0);
  T x = value(ystart) == value(y0) ? x0 : x0 + (ystart - y0) * dxdy;
  const int row_begin = static_cast<int>(std::floor(value(ystart)));
  const int row_end = std::min(height, static_cast<int>(std::ceil(value(y1))));
  for (int row = row_begin; row < row_end; ++row) {
    const T top = at_least(ystart, static_cast<double>(row));
    const T bottom = at_most(y1, static_cast<double>(row + 1));
    const T dy = bottom - top;
    const T xnext = value(y1) <= row + 1 ? x1 : x + dxdy * dy;
    const T d = dy * T(dir);
    const T& xa = value(x) < value(xnext) ? x : xnext;
    const T& xb = value(x) < value(xnext) ? xnext : x;
    const int xa_i = std::clamp(static_cast<int>(std::floor(value(xa))), 0, width);
    const int xb_i = std::clamp(static_cast<int>(std::ceil(value(xb))), xa_i, width + 1);
    const double xa_floor = xa_i;
    const double xb_ceil = xb_i;
    if (xb_i <= xa_i + 1) {
      const T mid = T(0.5) * (x + xnext) - T(xa_floor);
      sink(row, xa_i, d - d * mid);
      sink(row, xa_i + 1, d * mid);
    } else {
      const T s = T(1.0) / (xb - xa);
      const T xa_frac = xa - T(xa_floor);
      const T a0 = T(0.5) * s * (T(1.0) - xa_frac) * (T(1.0) - xa_frac);
      const T xb_frac = xb - T(xb_ceil) + T(1.0);
      const T am = T(0.5) * s * xb_frac * xb_frac;
      sink(row, xa_i, d * a0);
      if (xb_i == xa_i + 2) {
        sink(row, xa_i + 1, d * (T(1.0) - a0 - am));
      } else {
        const T a1 = s * (T(1.5) - xa_frac);
        sink(row, xa_i + 1, d * (a1 - a0));
        for (int xi = xa_i + 2; xi < xb_i - 1; ++xi) sink(row, xi, d * s);
        const T a2 = a1 + T(static_cast<double>(xb_i - xa_i - 3)) * s;
        sink(row, xb_i - 1, d * (T(1.0) - a2 - am));
      }
      sink(row, xb_i, d * am);
    }
    x = xnext;
  }
}

// Splits an edge where it crosses x = 0 and x = width and collapses the
// outside pieces onto those lines: everything left of the canvas covers
// column 0 completely, everything right of it is invisible.
template <class T, class Sink>
void draw_edge(T x0, T y0, T x1, T y1, int width, int height, Sink&& sink) {
  struct Cut {
    double t;
    double bound;
  };
  std::array<Cut, 2> cuts{};
  int count = 0;
  const double vx0 = value(x0), vx1 = value(x1);
  for (double bound : {0.0, static_cast<double>(width)}) {
    if ((vx0 - bound) * (vx1 - bound) < 0.0) cuts[count++] = {(bound - vx0) / (vx1 - vx0), bound};
  }
  if (count == 2 && cuts[1].t < cuts[0].t) std::swap(cuts[0], cuts[1]);
  T px = x0, py = y0;
  for (int i = 0; i <= count; ++i) {
    T qx = x1, qy = y1;
    if (i < count) {
      // Crossing point, differentiated through the endpoints.
      const T t = (T(cuts[i].bound) - x0) / (x1 - x0);
      qx = T(cuts[i].bound);
      qy = y0 + t * (y1 - y0);
    }
    const double mid = 0.5 * (value(px) + value(qx));
    if (mid < 0.0) {
      accumulate_edge(T(0.0), py, T(0.0), qy, width, height, sink);
    } else if (mid > width) {
      const T edge(static_cast<double>(width));
      accumulate_edge(edge, py, edge, qy, width, height, sink);
    } else {
      accumulate_edge(px, py, qx, qy, width, height, sink);
    }
    px = qx;
    py = qy;
  }
}

}  // namespace

RasterResult rasterize(const GlyphPath& path, const Canvas& canvas, int flatten_segments) {
  if (canvas.size < 16) throw Error(ErrorCode::InvalidArgument, "canvas size must be at least 16");
  if (flatten_segments < 1) throw Error(ErrorCode::InvalidArgument, "flatten_segments must be positive");
  for (const Vec2& p : path.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::NonFiniteCoordinate, "path has a non-finite control point");
    }
  }
  const int w = canvas.size, h = canvas.size;
  RasterResult result;
  RasterTape& tape = result.tape;
  tape.width_ = w;
  tape.height_ = h;
  tape.pixels_per_em_ = canvas.pixels_per_em();
  tape.point_count_ = path.points.size();

  for (std::size_t s = 0; s < path.subpaths.size(); ++s) {
    std::vector<RasterTape::Vertex> ring;
    for (std::size_t k = 0; k < path.subpaths[s].segment_count; ++k) {
      const auto idx = path.segment_indices(s, k);
      const Cubic c = path.segment(s, k);
      for (int m = 0; m < flatten_segments; ++m) {
        const double t = static_cast<double>(m) / flatten_segments;
        ring.push_back({canvas.to_pixel(evaluate(c, t)), idx, bernstein3(t)});
      }
    }
    tape.rings_.push_back(std::move(ring));
  }

  const int stride = w + 2;
  std::vector<double> cells(static_cast<std::size_t>(h) * stride, 0.0);
  auto sink = [&](int row, int col, double v) { cells[static_cast<std::size_t>(row) * stride + col] += v; };
  for (const auto& ring : tape.rings_) {
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Vec2 a = ring[i].pixel;
      const Vec2 b = ring[(i + 1) % ring.size()].pixel;
      draw_edge(a.x, a.y, b.x, b.y, w, h, sink);
    }
  }

  result.image = RasterImage(w, h);
  tape.accumulation_.assign(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int x = 0; x < w; ++x) {
      acc += cells[static_cast<std::size_t>(y) * stride + x];
      tape.accumulation_[static_cast<std::size_t>(y) * w + x] = acc;
      result.image.at(x, y) = 1.0 - std::min(std::abs(acc), 1.0);
    }
  }
  return result;
}

std::vector<Vec2> RasterTape::vjp(std::span<const double> upstream) const {
  if (upstream.size() != static_cast<std::size_t>(width_) * height_) {
    throw Error(ErrorCode::SizeMismatch, "upstream gradient does not match the raster size");
  }
  // d image / d accumulation, then suffix sums: a cell at column c feeds the
  // running sum of every pixel at or right of c.
  const int stride = width_ + 2;
  std::vector<double> suffix(static_cast<std::size_t>(height_) * stride, 0.0);
  for (int y = 0; y < height_; ++y) {
    double running = 0.0;
    for (int x = width_ - 1; x >= 0; --x) {
      const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
      const double acc = accumulation_[i];
      if (std::abs(acc) < 1.0 && acc != 0.0) running -= upstream[i] * (acc > 0.0 ? 1.0 : -1.0);
      suffix[static_cast<std::size_t>(y) * stride + x] = running;
    }
  }

  std::vector<Vec2> grad(point_count_, Vec2{});
  std::array<double, 4> edge_grad{};
  auto sink = [&](int row, int col, const Dual& v) {
    const double s = suffix[static_cast<std::size_t>(row) * stride + col];
    if (s == 0.0) return;
    for (int i = 0; i < 4; ++i) edge_grad[i] += s * v.d[i];
  };
  for (const auto& ring : rings_) {
    std::vector<Vec2> vertex_grad(ring.size(), Vec2{});
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const std::size_t j = (i + 1) % ring.size();
      const Vec2 a = ring[i].pixel;
      const Vec2 b = ring[j].pixel;
      edge_grad = {};
      draw_edge(Dual(a.x, 0), Dual(a.y, 1), Dual(b.x, 2), Dual(b.y, 3), width_, height_, sink);
      vertex_grad[i] += Vec2{edge_grad[0], edge_grad[1]};
      vertex_grad[j] += Vec2{edge_grad[2], edge_grad[3]};
    }
    // pixel = margin + scale * (x, 1 - y)
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const Vec2 g{pixels_per_em_ * vertex_grad[i].x, -pixels_per_em_ * vertex_grad[i].y};
      for (int c = 0; c < 4; ++c) grad[ring[i].controls[c]] += ring[i].weights[c] * g;
    }
  }
  return grad;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// One 1-D pass along rows (horizontal) or columns; `transpose` scatters
// instead of gathers.
RasterImage blur_pass(const RasterImage& in, const std::vector<double>& k, bool horizontal, bool transpose) {
  const int radius = static_cast<int>(k.size() / 2);
  RasterImage out(in.width, in.height, 0.0);
  const int length = horizontal ? in.width : in.height;
  const int lines = horizontal ? in.height : in.width;
  std::vector<double> line(length), result(length);
  for (int l = 0; l < lines; ++l) {
    for (int i = 0; i < length; ++i) line[i] = horizontal ? in.at(i, l) : in.at(l, i);
    std::fill(result.begin(), result.end(), 0.0);
    for (int i = 0; i < length; ++i) {
      for (int o = -radius; o <= radius; ++o) {
        const int j = std::clamp(i + o, 0, length - 1);
        if (transpose) {
          result[j] += k[o + radius] * line[i];
        } else {
          result[i] += k[o + radius] * line[j];
        }
      }
    }
    for (int i = 0; i < length; ++i) (horizontal ? out.at(i, l) : out.at(l, i)) = result[i];
  }
  return out;
}

}  // namespace

RasterImage gaussian_lpf(const RasterImage& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  return blur_pass(blur_pass(img, k, true, false), k, false, false);
}

RasterImage gaussian_lpf_adjoint(const RasterImage& upstream, double sigma) {
  const auto k = gaussian_kernel(sigma);
  return blur_pass(blur_pass(upstream, k, false, true), k, true, true);
}

ToneReference::ToneReference(const RasterImage& original, double sigma, ToneReduction reduction)
    : blurred_(gaussian_lpf(original, sigma)), sigma_(sigma), reduction_(reduction) {}

ToneReference::Evaluation ToneReference::evaluate(const RasterImage& deformed) const {
  if (deformed.width != blurred_.width || deformed.height != blurred_.height) {
    throw Error(ErrorCode::CanvasMismatch, "raster size differs from the reference raster");
  }
  const RasterImage blurred = gaussian_lpf(deformed, sigma_);
  const double scale = reduction_ == ToneReduction::Mean ? 1.0 / static_cast<double>(blurred.pixel_count()) : 1.0;
  Evaluation out;
  RasterImage diff(blurred.width, blurred.height, 0.0);
  for (std::size_t i = 0; i < blurred.pixel_count(); ++i) {
    const double d = blurred.data[i] - blurred_.data[i];
    out.loss += d * d;
    diff.data[i] = 2.0 * scale * d;
  }
  out.loss *= scale;
  out.image_grad = gaussian_lpf_adjoint(diff, sigma_);
  return out;
}

ToneResult tone_loss(const RasterImage& raster_original, const GlyphPath& path_hat, double sigma,
                     const Canvas& canvas, ToneReduction reduction, int flatten_segments) {
  if (raster_original.width != canvas.size || raster_original.height != canvas.size) {
    throw Error(ErrorCode::CanvasMismatch, "original raster does not match the canvas");
  }
  const ToneReference reference(raster_original, sigma, reduction);
  const auto raster = rasterize(path_hat, canvas, flatten_segments);
  auto eval = reference.evaluate(raster.image);
  return {eval.loss, raster.tape.vjp(eval.image_grad.data)};
}

}  // namespace wordasimage
