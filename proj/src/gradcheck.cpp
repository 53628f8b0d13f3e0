#include "wordasimage/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wordasimage/engine.hpp"
#include "wordasimage/raster.hpp"
#include "wordasimage/triangulation.hpp"

namespace wordasimage {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

bool GradCheckReport::ok() const {
  const double limit = hard_limit > 0.0 ? hard_limit : tolerance;
  return probed > 0 && fraction() >= required_fraction && worst <= limit;
}

void GradCheckReport::record(double err) {
  ++probed;
  if (err <= tolerance) ++within_tolerance;
  worst = std::max(worst, err);
}

GlyphPath random_blob(Rng& rng, std::size_t segments) {
  const std::size_t n = 3 * segments;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  GlyphPath path;
  path.letter = "blob";
  path.advance = 1.0;
  const double phase = rng.uniform(0.0, step);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = phase + step * (static_cast<double>(i) + rng.uniform(-0.3, 0.3));
    const double radius = rng.uniform(0.18, 0.34);
    path.points.push_back({0.5 + radius * std::cos(angle), 0.5 + radius * std::sin(angle)});
  }
  path.subpaths.push_back({0, segments});
  return path;
}

namespace {

double dot_image(const RasterImage& a, const std::vector<double>& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * u[i];
  return s;
}

std::vector<double> random_upstream(Rng& rng, std::size_t n) {
  std::vector<double> u(n);
  for (double& v : u) v = rng.uniform(-1.0, 1.0);
  return u;
}

// Probes one coordinate (point index, axis) of `points` with a central
// difference of `f`.
template <typename F>
double central_difference(std::vector<Vec2> points, std::size_t index, int axis, double h, F&& f) {
  double& c = axis == 0 ? points[index].x : points[index].y;
  const double saved = c;
  c = saved + h;
  const double plus = f(points);
  c = saved - h;
  const double minus = f(points);
  return (plus - minus) / (2.0 * h);
}

double component(Vec2 v, int axis) { return axis == 0 ? v.x : v.y; }

GradCheckReport raster_check(Rng& rng, int paths) {
  GradCheckReport report{"rasterizer vjp", 0, 0, 0.0, 1e-3, 0.98, 1e-2};
  const Canvas canvas{128, 0.7};
  const double h = 1e-4 / canvas.pixels_per_em();
  for (int p = 0; p < paths; ++p) {
    GlyphPath blob = random_blob(rng, 4 + static_cast<std::size_t>(rng.uniform_int(0, 4)));
    const RasterResult r = rasterize(blob, canvas);
    const std::vector<double> u = random_upstream(rng, r.image.pixel_count());
    const std::vector<Vec2> grad = r.tape.vjp(u);
    for (int k = 0; k < 20; ++k) {
      const auto index = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(blob.points.size()) - 1));
      const int axis = rng.uniform_int(0, 1);
      const double numeric = central_difference(blob.points, index, axis, h, [&](const std::vector<Vec2>& pts) {
        GlyphPath g = blob;
        g.points = pts;
        return dot_image(rasterize(g, canvas).image, u);
      });
      report.record(relative_error(component(grad[index], axis), numeric, 1e-6));
    }
  }
  return report;
}

GradCheckReport acap_check(Rng& rng) {
  GradCheckReport report{"acap gradient", 0, 0, 0.0, 1e-4, 1.0, 0.0};
  for (int p = 0; p < 20; ++p) {
    const GlyphPath blob = random_blob(rng, 4 + static_cast<std::size_t>(rng.uniform_int(0, 4)));
    const Triangulation tri = triangulate_interior(blob);
    std::vector<Vec2> deformed = blob.points;
    for (Vec2& q : deformed) q += Vec2{rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)};
    const AcapResult a = acap_loss(blob.points, deformed, tri);
    for (std::size_t i = 0; i < deformed.size(); ++i) {
      for (int axis = 0; axis < 2; ++axis) {
        const double numeric = central_difference(deformed, i, axis, 1e-6, [&](const std::vector<Vec2>& pts) {
          return acap_loss(blob.points, pts, tri).loss;
        });
        report.record(relative_error(component(a.grad[i], axis), numeric, 1e-7));
      }
    }
  }
  return report;
}

GradCheckReport tone_check(Rng& rng) {
  GradCheckReport report{"tone gradient", 0, 0, 0.0, 1e-3, 1.0, 0.0};
  const Canvas canvas{128, 0.7};
  const double h = 1e-4 / canvas.pixels_per_em();
  for (int p = 0; p < 5; ++p) {
    const GlyphPath blob = random_blob(rng, 6);
    const RasterImage original = rasterize(blob, canvas).image;
    const GlyphPath moved = translated(blob, {3.0 / canvas.pixels_per_em(), -2.0 / canvas.pixels_per_em()});
    const ToneResult t = tone_loss(original, moved, 8.0, canvas);
    for (int k = 0; k < 10; ++k) {
      const auto index = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(moved.points.size()) - 1));
      const int axis = rng.uniform_int(0, 1);
      const double numeric = central_difference(moved.points, index, axis, h, [&](const std::vector<Vec2>& pts) {
        GlyphPath g = moved;
        g.points = pts;
        return tone_loss(original, g, 8.0, canvas).loss;
      });
      report.record(relative_error(component(t.grad[index], axis), numeric, 1e-12));
    }
  }
  return report;
}

GradCheckReport augment_check(Rng& rng) {
  GradCheckReport report{"augmentation vjp", 0, 0, 0.0, 1e-3, 1.0, 0.0};
  const int source = 96;
  const int target = 80;
  RasterImage img(source, source);
  for (double& v : img.data) v = rng.uniform();
  const AugmentParams params = sample_params(rng, source, target, 0.5, 1.0);
  const AugmentResult r = apply(img, params);
  RasterImage upstream(target, target);
  for (double& v : upstream.data) v = rng.uniform(-1.0, 1.0);
  const RasterImage grad = r.vjp.vjp(upstream);
  for (int k = 0; k < 20; ++k) {
    const std::size_t i = static_cast<std::size_t>(rng.uniform_int(0, source * source - 1));
    RasterImage plus = img;
    RasterImage minus = img;
    plus.data[i] += 1e-4;
    minus.data[i] -= 1e-4;
    const double numeric =
        (dot_image(apply(plus, params).image, upstream.data) - dot_image(apply(minus, params).image, upstream.data)) /
        2e-4;
    report.record(relative_error(grad.data[i], numeric, 1e-9));
  }
  return report;
}

GradCheckReport end_to_end_check(Rng& rng) {
  GradCheckReport report{"assembled objective", 0, 0, 0.0, 1e-3, 1.0, 0.0};
  RunConfig cfg;
  cfg.canvas = 128;
  cfg.crop = 112;
  cfg.lpf_sigma = 8.0;
  cfg.tone_schedule = {100.0, 0.0, 12.0, true};
  const GlyphPath blob = random_blob(rng, 6);
  const Precomputed pre = precompute(blob, cfg);
  cfg.guidance.oracle_offset_x = 4.0;
  OracleBackend backend(oracle_target(blob, cfg));
  AugmentParams params = AugmentParams::identity(cfg.canvas, cfg.crop);
  params.crop_x = 5;
  params.crop_y = 9;

  std::vector<Vec2> start = blob.points;
  for (Vec2& q : start) q += Vec2{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
  const GradientEvaluation eval = total_gradient(pre, start, 0, cfg, backend, params, 0);
  const double h = 1e-4 / pre.canvas.pixels_per_em();
  for (int k = 0; k < 10; ++k) {
    const auto index = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(start.size()) - 1));
    const int axis = rng.uniform_int(0, 1);
    const double numeric = central_difference(start, index, axis, h, [&](const std::vector<Vec2>& pts) {
      return total_gradient(pre, pts, 0, cfg, backend, params, 0).terms.total();
    });
    report.record(relative_error(component(eval.grad[index], axis), numeric, 1e-6));
  }
  return report;
}

}  // namespace

std::vector<GradCheckReport> run_gradient_checks(std::uint64_t seed, int raster_paths) {
  Rng rng(seed);
  std::vector<GradCheckReport> out;
  out.push_back(raster_check(rng, raster_paths));
  out.push_back(acap_check(rng));
  out.push_back(tone_check(rng));
  out.push_back(augment_check(rng));
  out.push_back(end_to_end_check(rng));
  return out;
}

}  // namespace wordasimage
