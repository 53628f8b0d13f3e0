#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wordasimage/geometry.hpp"
#include "wordasimage/glyph_path.hpp"

namespace wordasimage {

/// Square canvas with the em box fitted, centered, into `fill_fraction` of
/// its width. Pixel y grows downward.
struct Canvas {
  int size = 600;
  double fill_fraction = 0.7;

  double pixels_per_em() const { return fill_fraction * size; }
  double margin() const { return 0.5 * (1.0 - fill_fraction) * size; }
  Vec2 to_pixel(Vec2 em) const { return {margin() + pixels_per_em() * em.x, margin() + pixels_per_em() * (1.0 - em.y)}; }
  friend bool operator==(const Canvas&, const Canvas&) = default;
};

/// Row-major single-channel image, 1 = white background, 0 = full ink.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  RasterImage() = default;
  RasterImage(int w, int h, double fill = 1.0) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t pixel_count() const { return data.size(); }
};

struct RasterResult;

/// Nonzero-fill rasterization with exact pixel-area anti-aliasing. Each cubic
/// is flattened into `flatten_segments` chords at uniform parameters.
RasterResult rasterize(const GlyphPath& path, const Canvas& canvas, int flatten_segments = 16);

/// Reverse-mode record of one rasterization: maps image-shaped upstream
/// gradients back onto the path's control points.
class RasterTape {
 public:
  std::vector<Vec2> vjp(std::span<const double> upstream) const;

 private:
  friend RasterResult rasterize(const GlyphPath&, const Canvas&, int);

  struct Vertex {
    Vec2 pixel;
    std::array<std::size_t, 4> controls;
    std::array<double, 4> weights;
  };
  int width_ = 0;
  int height_ = 0;
  double pixels_per_em_ = 0.0;
  std::size_t point_count_ = 0;
  std::vector<std::vector<Vertex>> rings_;  // flattened closed polygons
  std::vector<double> accumulation_;        // signed coverage per pixel
};

struct RasterResult {
  RasterImage image;
  RasterTape tape;
};

/// Separable normalized Gaussian, radius ceil(3 sigma), replicate padding.
RasterImage gaussian_lpf(const RasterImage& img, double sigma);

/// Exact transpose of gaussian_lpf (replicate padding folds onto the edges).
RasterImage gaussian_lpf_adjoint(const RasterImage& upstream, double sigma);

enum class ToneReduction { Sum, Mean };

struct ToneResult {
  double loss = 0.0;
  std::vector<Vec2> grad;  // d loss / d P_hat
};

/// Blurred original raster, computed once per run.
class ToneReference {
 public:
  ToneReference(const RasterImage& original, double sigma, ToneReduction reduction);

  struct Evaluation {
    double loss = 0.0;
    RasterImage image_grad;  // d loss / d raster(P_hat)
  };
  Evaluation evaluate(const RasterImage& deformed) const;

  const RasterImage& blurred() const { return blurred_; }
  double sigma() const { return sigma_; }

 private:
  RasterImage blurred_;
  double sigma_;
  ToneReduction reduction_;
};

/// || LPF(raster_original) - LPF(R(path_hat)) ||^2 with its gradient.
ToneResult tone_loss(const RasterImage& raster_original, const GlyphPath& path_hat, double sigma,
                     const Canvas& canvas, ToneReduction reduction = ToneReduction::Mean,
                     int flatten_segments = 16);

}  // namespace wordasimage
