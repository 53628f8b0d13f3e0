#include "wordasimage/engine.hpp"

#include <cmath>
#include <cstdio>

#include "wordasimage/image_io.hpp"

namespace wordasimage {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("invalid config: ") + what);
}

const char* backend_name(BackendKind k) {
  switch (k) {
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Remote: return "remote";
    case BackendKind::None: return "none";
  }
  return "oracle";
}

BackendKind parse_backend(const std::string& s) {
  if (s == "oracle") return BackendKind::Oracle;
  if (s == "remote") return BackendKind::Remote;
  if (s == "none") return BackendKind::None;
  throw Error(ErrorCode::InvalidArgument, "unknown guidance backend '" + s + "'");
}

// Reads `key` into `out` if present, then forgets it so leftovers can be
// reported as unknown.
template <typename T>
void take(nlohmann::json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  out = it->template get<T>();
  obj.erase(it);
}

void reject_leftovers(const nlohmann::json& obj, const std::string& where) {
  if (!obj.empty()) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + where + obj.begin().key() + "'");
}

nlohmann::json take_object(nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return nlohmann::json::object();
  if (!it->is_object()) throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "' must be an object");
  nlohmann::json out = *it;
  obj.erase(it);
  return out;
}

}  // namespace

void RunConfig::validate() const {
  require(iterations >= 1, "iterations must be >= 1");
  require(acap_weight >= 0.0, "acap_weight must be >= 0");
  require(tone_schedule.c > 0.0, "tone_schedule.c must be > 0");
  require(tone_schedule.a >= 0.0, "tone_schedule.a must be >= 0");
  require(lpf_sigma > 0.0, "lpf_sigma must be > 0");
  require(lr.warm_start > 0.0 && lr.peak > 0.0 && lr.final > 0.0, "learning rates must be > 0");
  require(lr.warm_iters >= 0, "lr.warm_iters must be >= 0");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "adam.beta1 must be in [0, 1)");
  require(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "adam.beta2 must be in [0, 1)");
  require(adam.eps > 0.0, "adam.eps must be > 0");
  require(canvas >= 16, "canvas must be >= 16");
  require(crop >= 16 && crop <= canvas, "crop must be in [16, canvas]");
  require(distortion >= 0.0 && distortion <= 1.0, "distortion must be in [0, 1]");
  require(p_perspective >= 0.0 && p_perspective <= 1.0, "p_perspective must be in [0, 1]");
  require(flatten_segments >= 1, "flatten_segments must be >= 1");
  require(guidance.guidance_scale >= 1.0, "guidance.guidance_scale must be >= 1");
  require(guidance.t_min >= 1 && guidance.t_max <= 999 && guidance.t_min <= guidance.t_max,
          "guidance.t_range must satisfy 1 <= t_min <= t_max <= 999");
  require(guidance.retry >= 1, "guidance.retry must be >= 1");
  require(guidance.timeout_seconds > 0.0, "guidance.timeout must be > 0");
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json overrides = nlohmann::json::object();
  for (const auto& [k, v] : cfg.subdivision.overrides) overrides[k] = v;
  return {
      {"iterations", cfg.iterations},
      {"acap_weight", cfg.acap_weight},
      {"tone_schedule",
       {{"a", cfg.tone_schedule.a}, {"b", cfg.tone_schedule.b}, {"c", cfg.tone_schedule.c},
        {"enabled", cfg.tone_schedule.enabled}}},
      {"lpf_sigma", cfg.lpf_sigma},
      {"tone_reduction", cfg.tone_reduction == ToneReduction::Mean ? "mean" : "sum"},
      {"lr",
       {{"warm_start", cfg.lr.warm_start}, {"peak", cfg.lr.peak}, {"final", cfg.lr.final},
        {"warm_iters", cfg.lr.warm_iters}}},
      {"adam", {{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"eps", cfg.adam.eps}}},
      {"canvas", cfg.canvas},
      {"crop", cfg.crop},
      {"distortion", cfg.distortion},
      {"p_perspective", cfg.p_perspective},
      {"augment", cfg.augment},
      {"flatten_segments", cfg.flatten_segments},
      {"subdivision",
       {{"uppercase", cfg.subdivision.uppercase}, {"lowercase", cfg.subdivision.lowercase},
        {"other", cfg.subdivision.other}, {"overrides", overrides}}},
      {"guidance",
       {{"backend", backend_name(cfg.guidance.backend)},
        {"concept", cfg.guidance.concept_word},
        {"prompt_template", cfg.guidance.prompt_template},
        {"endpoint", cfg.guidance.endpoint},
        {"timeout", cfg.guidance.timeout_seconds},
        {"retry", cfg.guidance.retry},
        {"t_range", {cfg.guidance.t_min, cfg.guidance.t_max}},
        {"guidance_scale", cfg.guidance.guidance_scale},
        {"oracle_offset", {cfg.guidance.oracle_offset_x, cfg.guidance.oracle_offset_y}},
        {"oracle_target_png", cfg.guidance.oracle_target_png}}},
      {"seed", cfg.seed},
  };
}

void apply_config_json(RunConfig& cfg, const nlohmann::json& input) {
  if (!input.is_object()) throw Error(ErrorCode::InvalidArgument, "config document must be an object");
  try {
    nlohmann::json doc = input;
    take(doc, "iterations", cfg.iterations);
    take(doc, "acap_weight", cfg.acap_weight);
    {
      nlohmann::json t = take_object(doc, "tone_schedule");
      take(t, "a", cfg.tone_schedule.a);
      take(t, "b", cfg.tone_schedule.b);
      take(t, "c", cfg.tone_schedule.c);
      take(t, "enabled", cfg.tone_schedule.enabled);
      reject_leftovers(t, "tone_schedule.");
    }
    take(doc, "lpf_sigma", cfg.lpf_sigma);
    if (auto it = doc.find("tone_reduction"); it != doc.end()) {
      const std::string r = it->get<std::string>();
      if (r == "mean") {
        cfg.tone_reduction = ToneReduction::Mean;
      } else if (r == "sum") {
        cfg.tone_reduction = ToneReduction::Sum;
      } else {
        throw Error(ErrorCode::InvalidArgument, "tone_reduction must be 'mean' or 'sum'");
      }
      doc.erase(it);
    }
    {
      nlohmann::json l = take_object(doc, "lr");
      take(l, "warm_start", cfg.lr.warm_start);
      take(l, "peak", cfg.lr.peak);
      take(l, "final", cfg.lr.final);
      take(l, "warm_iters", cfg.lr.warm_iters);
      reject_leftovers(l, "lr.");
    }
    {
      nlohmann::json a = take_object(doc, "adam");
      take(a, "beta1", cfg.adam.beta1);
      take(a, "beta2", cfg.adam.beta2);
      take(a, "eps", cfg.adam.eps);
      reject_leftovers(a, "adam.");
    }
    take(doc, "canvas", cfg.canvas);
    take(doc, "crop", cfg.crop);
    take(doc, "distortion", cfg.distortion);
    take(doc, "p_perspective", cfg.p_perspective);
    take(doc, "augment", cfg.augment);
    take(doc, "flatten_segments", cfg.flatten_segments);
    {
      nlohmann::json s = take_object(doc, "subdivision");
      take(s, "uppercase", cfg.subdivision.uppercase);
      take(s, "lowercase", cfg.subdivision.lowercase);
      take(s, "other", cfg.subdivision.other);
      if (auto it = s.find("overrides"); it != s.end()) {
        cfg.subdivision.overrides = it->get<std::map<std::string, std::size_t>>();
        s.erase(it);
      }
      reject_leftovers(s, "subdivision.");
    }
    {
      nlohmann::json g = take_object(doc, "guidance");
      GuidanceSpec& spec = cfg.guidance;
      if (auto it = g.find("backend"); it != g.end()) {
        spec.backend = parse_backend(it->get<std::string>());
        g.erase(it);
      }
      take(g, "concept", spec.concept_word);
      take(g, "prompt_template", spec.prompt_template);
      take(g, "endpoint", spec.endpoint);
      take(g, "timeout", spec.timeout_seconds);
      take(g, "retry", spec.retry);
      if (auto it = g.find("t_range"); it != g.end()) {
        const auto r = it->get<std::array<int, 2>>();
        spec.t_min = r[0];
        spec.t_max = r[1];
        g.erase(it);
      }
      take(g, "guidance_scale", spec.guidance_scale);
      if (auto it = g.find("oracle_offset"); it != g.end()) {
        const auto o = it->get<std::array<double, 2>>();
        spec.oracle_offset_x = o[0];
        spec.oracle_offset_y = o[1];
        g.erase(it);
      }
      take(g, "oracle_target_png", spec.oracle_target_png);
      reject_leftovers(g, "guidance.");
    }
    take(doc, "seed", cfg.seed);
    reject_leftovers(doc, "");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config value has the wrong type: ") + e.what());
  }
}

RunConfig run_config_from_json(const nlohmann::json& doc) {
  RunConfig cfg;
  apply_config_json(cfg, doc);
  return cfg;
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

double beta_schedule(double t, double a, double b, double c) {
  const double d = t - b;
  return a * std::exp(-(d * d) / (2.0 * c * c));
}

double lr_schedule(double t, const LrSchedule& lr, int iterations) {
  const double w = lr.warm_iters;
  if (t <= w) {
    if (w <= 0.0) return lr.peak;
    return lr.warm_start + (lr.peak - lr.warm_start) * (t / w);
  }
  if (iterations <= lr.warm_iters) return lr.peak;
  return lr.peak * std::pow(lr.final / lr.peak, (t - w) / (iterations - w));
}

OptState OptState::start(std::vector<Vec2> points) {
  OptState s;
  s.m.assign(points.size(), Vec2{});
  s.v.assign(points.size(), Vec2{});
  s.points = std::move(points);
  return s;
}

void adam_step(OptState& state, std::span<const Vec2> grad, double lr, const AdamParams& adam, double scale) {
  if (grad.size() != state.points.size()) throw Error(ErrorCode::SizeMismatch, "gradient size differs from P_hat");
  for (const Vec2& g : grad) {
    if (!std::isfinite(g.x) || !std::isfinite(g.y)) {
      throw Error(ErrorCode::NonFiniteGradient, "non-finite gradient at step " + std::to_string(state.t));
    }
  }
  const int step = state.t + 1;
  const double c1 = 1.0 - std::pow(adam.beta1, step);
  const double c2 = 1.0 - std::pow(adam.beta2, step);
  const auto update = [&](double g, double& m, double& v) {
    g /= scale;
    m = adam.beta1 * m + (1.0 - adam.beta1) * g;
    v = adam.beta2 * v + (1.0 - adam.beta2) * g * g;
    return lr * (m / c1) / (std::sqrt(v / c2) + adam.eps) / scale;
  };
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.points[i].x -= update(grad[i].x, state.m[i].x, state.v[i].x);
    state.points[i].y -= update(grad[i].y, state.m[i].y, state.v[i].y);
  }
  state.t = step;
}

Precomputed precompute(const GlyphPath& original, const RunConfig& cfg) {
  cfg.validate();
  const Canvas canvas = cfg.canvas_geometry();
  RasterImage raster = rasterize(original, canvas, cfg.flatten_segments).image;
  ToneReference tone(raster, cfg.lpf_sigma, cfg.tone_reduction);
  return {original, canvas, triangulate_interior(original), std::move(raster), std::move(tone)};
}

GradientEvaluation total_gradient(const Precomputed& pre, std::span<const Vec2> points, int iteration,
                                  const RunConfig& cfg, GuidanceBackend& backend, const AugmentParams& params,
                                  std::uint64_t guidance_seed) {
  GlyphPath current = pre.original;
  current.points.assign(points.begin(), points.end());

  RasterResult raster = rasterize(current, pre.canvas, cfg.flatten_segments);
  AugmentResult augmented = apply(raster.image, params);
  GuidanceGradient guidance = backend.gradient(augmented.image, params, guidance_seed);

  GradientEvaluation out;
  out.terms.guidance = guidance.loss_proxy;
  out.terms.acap_weight = cfg.acap_weight;
  out.terms.beta_t = cfg.tone_schedule.enabled
                         ? beta_schedule(iteration, cfg.tone_schedule.a, cfg.tone_schedule.b, cfg.tone_schedule.c)
                         : 0.0;

  // Both image-space terms share one pass back through the rasterizer.
  RasterImage image_grad = augmented.vjp.vjp(guidance.grad);
  const ToneReference::Evaluation tone = pre.tone.evaluate(raster.image);
  out.terms.tone = tone.loss;
  if (out.terms.beta_t != 0.0) {
    for (std::size_t i = 0; i < image_grad.data.size(); ++i) image_grad.data[i] += out.terms.beta_t * tone.image_grad.data[i];
  }
  out.grad = raster.tape.vjp(image_grad.data);

  const AcapResult acap = acap_loss(pre.original.points, points, pre.triangulation);
  out.terms.acap = acap.loss;
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += cfg.acap_weight * acap.grad[i];

  out.raster = std::move(raster.image);
  return out;
}

RasterImage oracle_target(const GlyphPath& original, const RunConfig& cfg) {
  const Canvas canvas = cfg.canvas_geometry();
  if (!cfg.guidance.oracle_target_png.empty()) {
    RasterImage img = read_png_gray(cfg.guidance.oracle_target_png);
    if (img.width != canvas.size || img.height != canvas.size) {
      throw Error(ErrorCode::SizeMismatch, "oracle target PNG must match the canvas size");
    }
    return img;
  }
  const double ppe = canvas.pixels_per_em();
  const Vec2 shift{cfg.guidance.oracle_offset_x / ppe, -cfg.guidance.oracle_offset_y / ppe};
  return rasterize(translated(original, shift), canvas, cfg.flatten_segments).image;
}

std::unique_ptr<GuidanceBackend> make_backend(const GlyphPath& original, const RunConfig& cfg,
                                              const std::string& concept_word) {
  switch (cfg.guidance.backend) {
    case BackendKind::Oracle: return std::make_unique<OracleBackend>(oracle_target(original, cfg));
    case BackendKind::None: return std::make_unique<ZeroBackend>();
    case BackendKind::Remote: {
      const std::string word = cfg.guidance.concept_word.empty() ? concept_word : cfg.guidance.concept_word;
      return std::make_unique<RemoteBackend>(cfg.guidance, build_prompt(word, cfg.guidance.prompt_template));
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown guidance backend");
}

LetterResult optimize_letter(const GlyphPath& path, const RunConfig& cfg, GuidanceBackend& backend,
                             std::uint64_t job_seed) {
  LetterResult result;
  result.final_path = path;
  int iteration = -1;
  try {
    const Precomputed pre = precompute(path, cfg);
    const double ppe = pre.canvas.pixels_per_em();
    Rng rng(job_seed);
    OptState state = OptState::start(path.points);
    result.trace.reserve(static_cast<std::size_t>(cfg.iterations));

    for (iteration = 0; iteration < cfg.iterations; ++iteration) {
      // Offsets and crop are always drawn so the stream does not depend on
      // whether augmentation is enabled.
      AugmentParams params = sample_params(rng, cfg.canvas, cfg.crop, cfg.distortion, cfg.p_perspective);
      if (!cfg.augment) params = AugmentParams::identity(cfg.canvas, cfg.crop);
      const std::uint64_t guidance_seed = rng.next();

      const GradientEvaluation eval =
          total_gradient(pre, state.points, iteration, cfg, backend, params, guidance_seed);
      const double lr = lr_schedule(iteration, cfg.lr, cfg.iterations);
      result.trace.push_back({iteration, lr, eval.terms.beta_t, eval.terms.guidance, eval.terms.acap,
                              eval.terms.tone, eval.terms.total()});
      adam_step(state, eval.grad, lr, cfg.adam, ppe);
      result.final_path.points = state.points;
    }
    iteration = -1;
    result.final_raster = rasterize(result.final_path, pre.canvas, cfg.flatten_segments).image;
  } catch (const Error& e) {
    result.failure = e.code();
    result.failure_message = e.what();
    result.failed_iteration = iteration;
  }
  return result;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iter,lr,beta_t,loss_guidance_proxy,loss_acap,loss_tone\n";
  char line[256];
  for (const TraceRow& r : trace) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.lr, r.beta_t,
                  r.loss_guidance_proxy, r.loss_acap, r.loss_tone);
    out += line;
  }
  return out;
}

}  // namespace wordasimage
