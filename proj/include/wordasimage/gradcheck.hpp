#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "wordasimage/augment.hpp"
#include "wordasimage/glyph_path.hpp"

namespace wordasimage {

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Star-shaped closed cubic path around (0.5, 0.5). Control points keep
/// increasing polar angle, so every control polygon is simple.
GlyphPath random_blob(Rng& rng, std::size_t segments);

struct GradCheckReport {
  std::string name;
  std::size_t probed = 0;
  std::size_t within_tolerance = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  double required_fraction = 1.0;  // of probes within tolerance
  double hard_limit = 0.0;         // no probe may exceed this (0: tolerance)

  double fraction() const { return probed ? static_cast<double>(within_tolerance) / probed : 0.0; }
  bool ok() const;
  void record(double err);
};

/// Central finite-difference suites for the rasterizer, ACAP, tone,
/// augmentation and the assembled objective.
std::vector<GradCheckReport> run_gradient_checks(std::uint64_t seed, int raster_paths = 100);

}  // namespace wordasimage
