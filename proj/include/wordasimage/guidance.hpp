#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wordasimage/augment.hpp"
#include "wordasimage/raster.hpp"

namespace wordasimage {

inline constexpr std::string_view kDefaultPromptTemplate =
    "a {word}. minimal flat 2d vector. lineal color. trending on artstation.";

enum class BackendKind { Oracle, Remote, None };

struct GuidanceSpec {
  BackendKind backend = BackendKind::Oracle;
  std::string concept_word;
  std::string prompt_template{kDefaultPromptTemplate};
  std::string endpoint = "http://127.0.0.1:8765";
  double timeout_seconds = 120.0;
  int retry = 3;
  int t_min = 50;
  int t_max = 950;
  double guidance_scale = 100.0;
  // Oracle target: the original letter shifted by this many canvas pixels
  // (x right, y down), unless a canvas-sized PNG is given.
  double oracle_offset_x = 10.0;
  double oracle_offset_y = 0.0;
  std::string oracle_target_png;
};

/// Substitutes every "{word}" in the template. Throws EmptyWord.
std::string build_prompt(std::string_view word, std::string_view prompt_template = kDefaultPromptTemplate);

/// Per-pixel d L / d x at the augmented-image boundary.
struct GuidanceGradient {
  RasterImage grad;
  double loss_proxy = 0.0;  // logging only
  int t_used = 0;
};

/// L = sum (x - target)^2, grad = 2 (x - target).
GuidanceGradient oracle_grad(const RasterImage& x, const RasterImage& target);

class GuidanceBackend {
 public:
  virtual ~GuidanceBackend() = default;

  /// `params` describes how `augmented` was produced from the canvas raster.
  virtual GuidanceGradient gradient(const RasterImage& augmented, const AugmentParams& params,
                                    std::uint64_t seed) = 0;
};

/// Offline stand-in: pulls the augmented raster toward a canvas-space target
/// that is augmented with the same parameters.
class OracleBackend final : public GuidanceBackend {
 public:
  explicit OracleBackend(RasterImage canvas_target) : target_(std::move(canvas_target)) {}
  GuidanceGradient gradient(const RasterImage& augmented, const AugmentParams& params, std::uint64_t seed) override;

 private:
  RasterImage target_;
};

/// Guidance switched off: zero gradient.
class ZeroBackend final : public GuidanceBackend {
 public:
  GuidanceGradient gradient(const RasterImage& augmented, const AugmentParams& params, std::uint64_t seed) override;
};

/// HTTP client for the score-distillation gradient service.
class RemoteBackend final : public GuidanceBackend {
 public:
  RemoteBackend(GuidanceSpec spec, std::string prompt) : spec_(std::move(spec)), prompt_(std::move(prompt)) {}
  GuidanceGradient gradient(const RasterImage& augmented, const AugmentParams& params, std::uint64_t seed) override;

 private:
  GuidanceSpec spec_;
  std::string prompt_;
};

/// Sends `x` (replicated to RGB) and the prompt to POST /v1/gradient and
/// reduces the per-channel response by summing channels.
GuidanceGradient remote_sds_grad(const RasterImage& x, const GuidanceSpec& spec, std::string_view prompt,
                                 std::uint64_t seed);

struct HealthStatus {
  std::string status;
  std::string model_id;
};
HealthStatus check_health(const GuidanceSpec& spec);

// Wire format helpers shared with the mock service.
nlohmann::json make_gradient_request(const RasterImage& x, std::string_view prompt, std::uint64_t seed,
                                     const GuidanceSpec& spec);
/// Decodes base64 little-endian float32 HWC data of `size * size * 3` values.
std::vector<float> decode_gradient_payload(std::string_view b64, int size);
std::string encode_gradient_payload(const std::vector<float>& values);
/// Channel-sum of an HWC gradient: the adjoint of gray -> RGB replication.
RasterImage reduce_channels(const std::vector<float>& hwc, int size);

}  // namespace wordasimage
