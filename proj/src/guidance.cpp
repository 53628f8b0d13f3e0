#include "wordasimage/guidance.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include <httplib.h>

#include "wordasimage/error.hpp"
#include "wordasimage/image_io.hpp"

namespace wordasimage {

static_assert(std::endian::native == std::endian::little, "wire format assumes a little-endian host");

std::string build_prompt(std::string_view word, std::string_view prompt_template) {
  if (word.empty()) throw Error(ErrorCode::EmptyWord, "concept word is empty");
  std::string out;
  constexpr std::string_view slot = "{word}";
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = prompt_template.find(slot, pos);
    if (hit == std::string_view::npos) break;
    out.append(prompt_template.substr(pos, hit - pos));
    out.append(word);
    pos = hit + slot.size();
  }
  out.append(prompt_template.substr(pos));
  if (out.empty()) throw Error(ErrorCode::EmptyWord, "rendered prompt is empty");
  return out;
}

GuidanceGradient oracle_grad(const RasterImage& x, const RasterImage& target) {
  if (x.width != target.width || x.height != target.height) {
    throw Error(ErrorCode::SizeMismatch, "oracle target size differs from image size");
  }
  GuidanceGradient out{RasterImage(x.width, x.height, 0.0), 0.0, 0};
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = x.data[i] - target.data[i];
    out.loss_proxy += d * d;
    out.grad.data[i] = 2.0 * d;
  }
  return out;
}

GuidanceGradient OracleBackend::gradient(const RasterImage& augmented, const AugmentParams& params, std::uint64_t) {
  return oracle_grad(augmented, apply(target_, params).image);
}

GuidanceGradient ZeroBackend::gradient(const RasterImage& augmented, const AugmentParams&, std::uint64_t) {
  return {RasterImage(augmented.width, augmented.height, 0.0), 0.0, 0};
}

GuidanceGradient RemoteBackend::gradient(const RasterImage& augmented, const AugmentParams&, std::uint64_t seed) {
  return remote_sds_grad(augmented, spec_, prompt_, seed);
}

nlohmann::json make_gradient_request(const RasterImage& x, std::string_view prompt, std::uint64_t seed,
                                     const GuidanceSpec& spec) {
  const std::vector<std::uint8_t> png = encode_png(x, 3);
  return {{"image_png_b64", base64_encode(png)},
          {"prompt", std::string(prompt)},
          {"seed", seed & 0x7fffffffULL},
          {"t_min", spec.t_min},
          {"t_max", spec.t_max},
          {"guidance_scale", spec.guidance_scale}};
}

std::string encode_gradient_payload(const std::vector<float>& values) {
  std::vector<std::uint8_t> bytes(values.size() * sizeof(float));
  std::memcpy(bytes.data(), values.data(), bytes.size());
  return base64_encode(bytes);
}

std::vector<float> decode_gradient_payload(std::string_view b64, int size) {
  const std::vector<std::uint8_t> bytes = base64_decode(b64);
  const std::size_t expected = static_cast<std::size_t>(size) * size * 3;
  if (bytes.size() != expected * sizeof(float)) {
    throw Error(ErrorCode::ProtocolError, "gradient payload has " + std::to_string(bytes.size()) +
                                              " bytes, expected " + std::to_string(expected * sizeof(float)));
  }
  std::vector<float> values(expected);
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

RasterImage reduce_channels(const std::vector<float>& hwc, int size) {
  RasterImage out(size, size, 0.0);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = static_cast<double>(hwc[3 * i]) + static_cast<double>(hwc[3 * i + 1]) +
                  static_cast<double>(hwc[3 * i + 2]);
  }
  return out;
}

namespace {

void configure(httplib::Client& client, const GuidanceSpec& spec) {
  const auto secs = static_cast<time_t>(spec.timeout_seconds);
  const auto usecs = static_cast<time_t>((spec.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
}

void check_spec(const GuidanceSpec& spec) {
  if (spec.t_min < 1 || spec.t_max > 999 || spec.t_min > spec.t_max) {
    throw Error(ErrorCode::InvalidArgument, "t range must satisfy 1 <= t_min <= t_max <= 999");
  }
  if (spec.retry < 1) throw Error(ErrorCode::InvalidArgument, "retry must be at least 1");
}

enum class Outcome { Ok, NonFinite };

struct Attempt {
  Outcome outcome = Outcome::Ok;
  GuidanceGradient result;
};

// One logical request with transport retries.
Attempt request_once(const RasterImage& x, const GuidanceSpec& spec, std::string_view prompt, std::uint64_t seed) {
  const std::string body = make_gradient_request(x, prompt, seed, spec).dump();
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < spec.retry; ++attempt) {
    httplib::Client client(spec.endpoint);
    configure(client, spec);
    const httplib::Result res = client.Post("/v1/gradient", body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 503 || res->status == 502 || res->status == 504 || res->status == 429) {
      last_error = "service returned " + std::to_string(res->status);
      continue;
    }
    if (res->status == 500) return {Outcome::NonFinite, {}};
    if (res->status != 200) {
      throw Error(ErrorCode::ProtocolError, "service rejected request with status " + std::to_string(res->status) +
                                                ": " + res->body);
    }

    GuidanceGradient out;
    std::vector<float> hwc;
    try {
      const nlohmann::json doc = nlohmann::json::parse(res->body);
      hwc = decode_gradient_payload(doc.at("grad").get<std::string>(), x.width);
      out.t_used = doc.at("t_used").get<int>();
      out.loss_proxy = doc.at("loss_proxy").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ProtocolError, std::string("malformed gradient response: ") + e.what());
    }
    for (float v : hwc) {
      if (!std::isfinite(v)) return {Outcome::NonFinite, {}};
    }
    if (!std::isfinite(out.loss_proxy)) return {Outcome::NonFinite, {}};
    out.grad = reduce_channels(hwc, x.width);
    return {Outcome::Ok, std::move(out)};
  }
  throw Error(ErrorCode::ServiceUnavailable,
              "gradient service at " + spec.endpoint + " unavailable after " + std::to_string(spec.retry) +
                  " attempts (" + last_error + ")");
}

}  // namespace

GuidanceGradient remote_sds_grad(const RasterImage& x, const GuidanceSpec& spec, std::string_view prompt,
                                 std::uint64_t seed) {
  check_spec(spec);
  if (x.width != x.height || x.width <= 0) throw Error(ErrorCode::SizeMismatch, "guidance image must be square");
  if (prompt.empty()) throw Error(ErrorCode::EmptyWord, "prompt is empty");

  Attempt first = request_once(x, spec, prompt, seed);
  if (first.outcome == Outcome::Ok) return std::move(first.result);
  // A fresh seed draws a fresh timestep server-side.
  Attempt second = request_once(x, spec, prompt, mix_seed(seed, 0x9e3779b97f4a7c15ULL));
  if (second.outcome == Outcome::Ok) return std::move(second.result);
  throw Error(ErrorCode::NonFiniteGradient, "gradient service returned non-finite output twice");
}

HealthStatus check_health(const GuidanceSpec& spec) {
  httplib::Client client(spec.endpoint);
  configure(client, spec);
  const httplib::Result res = client.Get("/v1/health");
  if (!res) throw Error(ErrorCode::ServiceUnavailable, "health check failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(ErrorCode::ServiceUnavailable, "service not ready (status " + std::to_string(res->status) + ")");
  }
  try {
    const nlohmann::json doc = nlohmann::json::parse(res->body);
    return {doc.at("status").get<std::string>(), doc.at("model_id").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed health response: ") + e.what());
  }
}

}  // namespace wordasimage
