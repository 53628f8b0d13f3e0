#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "wordasimage/geometry.hpp"
#include "wordasimage/raster.hpp"

namespace wordasimage {

/// One sampled augmentation: optional perspective warp, then a square crop.
struct AugmentParams {
  bool apply_perspective = false;
  // Displacement (pixels) of the top-left, top-right, bottom-right and
  // bottom-left source corners.
  std::array<Vec2, 4> corner_offsets{};
  int crop_x = 0;
  int crop_y = 0;
  int source_size = 600;
  int target_size = 512;

  /// No warp, centered crop.
  static AugmentParams identity(int source_size, int target_size);
};

/// Engine-owned random stream. Conversions to doubles and integers are done
/// by hand so that sampled values are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi);  // inclusive
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

AugmentParams sample_params(Rng& rng, int source_size, int target_size, double distortion_scale = 0.5,
                            double p_perspective = 0.7);

/// Adjoint of one `apply` call.
class AugmentVjp {
 public:
  explicit AugmentVjp(AugmentParams params) : params_(params) {}

  /// Maps a target_size^2 upstream gradient to a source_size^2 gradient.
  RasterImage vjp(const RasterImage& upstream) const;

  const AugmentParams& params() const { return params_; }

 private:
  AugmentParams params_;
};

struct AugmentResult {
  RasterImage image;
  AugmentVjp vjp;
};

/// Warps with the homography taking the source corners to the displaced
/// corners (bilinear sampling, out-of-frame reads as 1), then crops.
AugmentResult apply(const RasterImage& img, const AugmentParams& params);

/// 3x3 row-major homography mapping output (warped) pixel coordinates back
/// into the source image.
std::array<double, 9> inverse_homography(const AugmentParams& params);

}  // namespace wordasimage
