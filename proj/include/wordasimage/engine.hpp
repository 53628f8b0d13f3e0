#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordasimage/augment.hpp"
#include "wordasimage/error.hpp"
#include "wordasimage/glyph_path.hpp"
#include "wordasimage/guidance.hpp"
#include "wordasimage/raster.hpp"
#include "wordasimage/triangulation.hpp"

namespace wordasimage {

/// Gaussian bump weighting the tone term over iterations.
struct ToneSchedule {
  double a = 100.0;
  double b = 300.0;
  double c = 30.0;
  bool enabled = true;
};

struct LrSchedule {
  double warm_start = 0.1;
  double peak = 0.8;
  double final = 0.4;
  int warm_iters = 100;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.9;
  double eps = 1e-6;
};

struct RunConfig {
  int iterations = 500;
  double acap_weight = 0.5;
  ToneSchedule tone_schedule;
  double lpf_sigma = 30.0;
  ToneReduction tone_reduction = ToneReduction::Mean;
  LrSchedule lr;
  AdamParams adam;
  int canvas = 600;
  int crop = 512;
  double distortion = 0.5;
  double p_perspective = 0.7;
  bool augment = true;
  int flatten_segments = 16;
  SubdivisionTargets subdivision;
  GuidanceSpec guidance;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument naming the first bad field.
  void validate() const;
  Canvas canvas_geometry() const { return Canvas{canvas, 0.7}; }
};

nlohmann::json to_json(const RunConfig& cfg);
/// Overwrites only the keys present in `doc`; unknown keys are rejected.
void apply_config_json(RunConfig& cfg, const nlohmann::json& doc);
RunConfig run_config_from_json(const nlohmann::json& doc);
/// SHA-256 of the canonical JSON form.
std::string config_hash(const RunConfig& cfg);

double beta_schedule(double t, double a, double b, double c);
/// Linear warm-up to the peak, then exponential decay reaching `final` at
/// `iterations`.
double lr_schedule(double t, const LrSchedule& lr, int iterations);

struct OptState {
  std::vector<Vec2> points;  // P_hat
  std::vector<Vec2> m;
  std::vector<Vec2> v;
  int t = 0;

  static OptState start(std::vector<Vec2> points);
};

/// One bias-corrected Adam step. Gradients are divided by `scale` before the
/// moment update and the step is divided by `scale` again, so `lr` is
/// measured in units where one parameter unit spans `scale`.
/// Throws NonFiniteGradient.
void adam_step(OptState& state, std::span<const Vec2> grad, double lr, const AdamParams& adam, double scale = 1.0);

/// Everything fixed for the whole run of one letter.
struct Precomputed {
  GlyphPath original;
  Canvas canvas;
  Triangulation triangulation;
  RasterImage original_raster;
  ToneReference tone;
};

Precomputed precompute(const GlyphPath& original, const RunConfig& cfg);

struct LossTerms {
  double guidance = 0.0;  // backend loss proxy
  double acap = 0.0;
  double tone = 0.0;
  double beta_t = 0.0;
  double acap_weight = 0.0;

  double total() const { return guidance + acap_weight * acap + beta_t * tone; }
};

struct GradientEvaluation {
  std::vector<Vec2> grad;
  LossTerms terms;
  RasterImage raster;  // canvas raster of P_hat
};

/// Guidance + alpha * ACAP + beta_t * tone gradient at P_hat for one fixed
/// augmentation sample.
GradientEvaluation total_gradient(const Precomputed& pre, std::span<const Vec2> points, int iteration,
                                  const RunConfig& cfg, GuidanceBackend& backend, const AugmentParams& params,
                                  std::uint64_t guidance_seed);

struct TraceRow {
  int iter = 0;
  double lr = 0.0;
  double beta_t = 0.0;
  double loss_guidance_proxy = 0.0;
  double loss_acap = 0.0;
  double loss_tone = 0.0;
  double loss_total = 0.0;
};

struct LetterResult {
  GlyphPath final_path;
  std::vector<TraceRow> trace;
  RasterImage final_raster;
  std::optional<ErrorCode> failure;
  std::string failure_message;
  int failed_iteration = -1;

  bool ok() const { return !failure.has_value(); }
};

/// Canvas-space target for the oracle backend: the configured PNG, or the
/// letter shifted by the configured pixel offset.
RasterImage oracle_target(const GlyphPath& original, const RunConfig& cfg);

/// Backend selected by cfg.guidance; `concept_word` fills the prompt.
std::unique_ptr<GuidanceBackend> make_backend(const GlyphPath& original, const RunConfig& cfg,
                                              const std::string& concept_word);

/// Runs the optimization. Failures are recorded in the result along with the
/// trace rows completed so far; nothing is thrown for component errors.
LetterResult optimize_letter(const GlyphPath& path, const RunConfig& cfg, GuidanceBackend& backend,
                             std::uint64_t job_seed);

std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace wordasimage
