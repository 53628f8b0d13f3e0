#include "wordasimage/mock_service.hpp"

#include <httplib.h>

#include <json.hpp>

#include "wordasimage/error.hpp"
#include "wordasimage/guidance.hpp"
#include "wordasimage/image_io.hpp"

namespace wordasimage {

std::vector<float> mock_rgb_gradient(const std::vector<double>& rgb_hwc, const RasterImage& target, double* loss) {
  if (rgb_hwc.size() != target.data.size() * 3) throw Error(ErrorCode::SizeMismatch, "mock target size mismatch");
  std::vector<float> grad(rgb_hwc.size());
  double total = 0.0;
  for (std::size_t i = 0; i < target.data.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = rgb_hwc[3 * i + c] - target.data[i];
      total += d * d / 3.0;
      grad[3 * i + c] = static_cast<float>(2.0 * d / 3.0);
    }
  }
  if (loss) *loss = total;
  return grad;
}

MockSdsServer::MockSdsServer(RasterImage target, std::string model_id)
    : target_(std::move(target)), model_id_(std::move(model_id)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

MockSdsServer::~MockSdsServer() { stop(); }

std::vector<std::uint64_t> MockSdsServer::seeds_seen() const {
  std::lock_guard lock(seeds_mutex_);
  return seeds_;
}

void MockSdsServer::install_routes() {
  const auto error_body = [](httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
  };

  server_->Get("/v1/health", [this, error_body](const httplib::Request&, httplib::Response& res) {
    if (!ready_) return error_body(res, 503, "model not loaded");
    res.set_content(nlohmann::json{{"status", "ok"}, {"model_id", model_id_}}.dump(), "application/json");
  });

  server_->Post("/v1/gradient", [this, error_body](const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    if (!ready_) return error_body(res, 503, "model not loaded");

    RgbImage image;
    std::uint64_t seed = 0;
    int t_min = 0;
    int t_max = 0;
    try {
      const nlohmann::json doc = nlohmann::json::parse(req.body);
      const auto png = base64_decode(doc.at("image_png_b64").get<std::string>());
      image = decode_png_rgb(png);
      if (doc.at("prompt").get<std::string>().empty()) return error_body(res, 400, "empty prompt");
      seed = doc.at("seed").get<std::uint64_t>();
      t_min = doc.at("t_min").get<int>();
      t_max = doc.at("t_max").get<int>();
      if (doc.at("guidance_scale").get<double>() < 1.0) return error_body(res, 400, "guidance_scale < 1");
    } catch (const nlohmann::json::exception& e) {
      return error_body(res, 400, e.what());
    } catch (const Error& e) {
      return error_body(res, 400, e.what());
    }
    if (t_min < 1 || t_max > 999 || t_min > t_max) return error_body(res, 400, "invalid t range");
    if (image.width != target_.width || image.height != target_.height) {
      return error_body(res, 400, "image size does not match the mock target");
    }
    {
      std::lock_guard lock(seeds_mutex_);
      seeds_.push_back(seed);
    }
    if (failures_ > 0) {
      --failures_;
      return error_body(res, 500, "non-finite gradient");
    }

    double loss = 0.0;
    const std::vector<float> grad = mock_rgb_gradient(image.data, target_, &loss);
    const int t_used = t_min + static_cast<int>(seed % static_cast<std::uint64_t>(t_max - t_min + 1));
    res.set_content(
        nlohmann::json{{"grad", encode_gradient_payload(grad)}, {"t_used", t_used}, {"loss_proxy", loss}}.dump(),
        "application/json");
  });
}

int MockSdsServer::start(int port, const std::string& host) {
  if (thread_.joinable()) throw Error(ErrorCode::InvalidArgument, "mock server already running");
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw Error(ErrorCode::IoError, "mock server could not bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockSdsServer::listen_blocking(int port, const std::string& host) {
  port_ = port;
  if (!server_->listen(host, port)) throw Error(ErrorCode::IoError, "mock server could not listen on port");
}

void MockSdsServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace wordasimage
