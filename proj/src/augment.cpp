#include "wordasimage/augment.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "wordasimage/error.hpp"

namespace wordasimage {

AugmentParams AugmentParams::identity(int source_size, int target_size) {
  AugmentParams p;
  p.source_size = source_size;
  p.target_size = target_size;
  p.crop_x = (source_size - target_size) / 2;
  p.crop_y = (source_size - target_size) / 2;
  return p;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) {
  const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(engine_() % range);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

AugmentParams sample_params(Rng& rng, int source_size, int target_size, double distortion_scale,
                            double p_perspective) {
  if (target_size > source_size) throw Error(ErrorCode::InvalidArgument, "crop larger than the source image");
  AugmentParams p;
  p.source_size = source_size;
  p.target_size = target_size;
  p.apply_perspective = rng.uniform() < p_perspective;
  const double bound = 0.5 * distortion_scale * source_size;
  for (Vec2& offset : p.corner_offsets) {
    // Always drawn so the stream position does not depend on the coin flip.
    offset = {rng.uniform(-bound, bound), rng.uniform(-bound, bound)};
    if (!p.apply_perspective) offset = {};
  }
  p.crop_x = rng.uniform_int(0, source_size - target_size);
  p.crop_y = rng.uniform_int(0, source_size - target_size);
  return p;
}

std::array<double, 9> inverse_homography(const AugmentParams& params) {
  const double s = params.source_size;
  const std::array<Vec2, 4> source{Vec2{0.0, 0.0}, Vec2{s, 0.0}, Vec2{s, s}, Vec2{0.0, s}};
  // Solve for H with H(displaced corner) = source corner, h33 = 1.
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const Vec2 from = source[i] + params.corner_offsets[i];
    const Vec2 to = source[i];
    a.row(2 * i) << from.x, from.y, 1.0, 0.0, 0.0, 0.0, -to.x * from.x, -to.x * from.y;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, from.x, from.y, 1.0, -to.y * from.x, -to.y * from.y;
    b(2 * i) = to.x;
    b(2 * i + 1) = to.y;
  }
  const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
  return {h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0};
}

namespace {

struct Tap {
  int x, y;
  double w;
};

// Visits the bilinear taps for every output pixel. Taps outside the source
// are reported with x = -1 so callers can substitute the background.
template <class Visit>
void for_each_tap(const AugmentParams& params, Visit&& visit) {
  const int n = params.target_size;
  const int src = params.source_size;
  const bool warp = params.apply_perspective;
  const auto h = warp ? inverse_homography(params) : std::array<double, 9>{};
  for (int oy = 0; oy < n; ++oy) {
    for (int ox = 0; ox < n; ++ox) {
      const double px = params.crop_x + ox + 0.5;
      const double py = params.crop_y + oy + 0.5;
      double sx = px, sy = py;
      if (warp) {
        const double den = h[6] * px + h[7] * py + h[8];
        sx = (h[0] * px + h[1] * py + h[2]) / den;
        sy = (h[3] * px + h[4] * py + h[5]) / den;
      }
      const double fx = sx - 0.5, fy = sy - 0.5;
      const double x0 = std::floor(fx), y0 = std::floor(fy);
      const double tx = fx - x0, ty = fy - y0;
      const int ix = static_cast<int>(x0), iy = static_cast<int>(y0);
      const std::array<Tap, 4> taps{Tap{ix, iy, (1 - tx) * (1 - ty)}, Tap{ix + 1, iy, tx * (1 - ty)},
                                    Tap{ix, iy + 1, (1 - tx) * ty}, Tap{ix + 1, iy + 1, tx * ty}};
      for (Tap t : taps) {
        if (t.w == 0.0) continue;
        if (t.x < 0 || t.y < 0 || t.x >= src || t.y >= src) t.x = -1;
        visit(ox, oy, t);
      }
    }
  }
}

}  // namespace

AugmentResult apply(const RasterImage& img, const AugmentParams& params) {
  if (img.width != params.source_size || img.height != params.source_size) {
    throw Error(ErrorCode::SizeMismatch, "image does not match the augmentation source size");
  }
  if (params.crop_x < 0 || params.crop_y < 0 || params.crop_x + params.target_size > params.source_size ||
      params.crop_y + params.target_size > params.source_size) {
    throw Error(ErrorCode::InvalidArgument, "crop window leaves the source image");
  }
  RasterImage out(params.target_size, params.target_size, 0.0);
  for_each_tap(params, [&](int ox, int oy, Tap t) {
    out.at(ox, oy) += t.w * (t.x < 0 ? 1.0 : img.at(t.x, t.y));
  });
  return {std::move(out), AugmentVjp(params)};
}

RasterImage AugmentVjp::vjp(const RasterImage& upstream) const {
  if (upstream.width != params_.target_size || upstream.height != params_.target_size) {
    throw Error(ErrorCode::SizeMismatch, "upstream gradient does not match the crop size");
  }
  RasterImage grad(params_.source_size, params_.source_size, 0.0);
  for_each_tap(params_, [&](int ox, int oy, Tap t) {
    if (t.x >= 0) grad.at(t.x, t.y) += t.w * upstream.at(ox, oy);
  });
  return grad;
}

}  // namespace wordasimage
