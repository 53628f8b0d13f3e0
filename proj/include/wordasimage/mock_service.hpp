#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wordasimage/raster.hpp"

namespace httplib {
class Server;
}

namespace wordasimage {

/// Per-channel gradient of (1/3) sum_c (x_c - t)^2 for an HWC RGB image.
/// Summed over channels this is 2 (x - t) when x is a replicated gray image.
std::vector<float> mock_rgb_gradient(const std::vector<double>& rgb_hwc, const RasterImage& target, double* loss);

/// In-process stand-in for the gradient service, speaking the same wire
/// protocol. Serves on 127.0.0.1 from a background thread.
class MockSdsServer {
 public:
  explicit MockSdsServer(RasterImage target, std::string model_id = "mock-oracle");
  ~MockSdsServer();
  MockSdsServer(const MockSdsServer&) = delete;
  MockSdsServer& operator=(const MockSdsServer&) = delete;

  /// Binds `port` (0 picks a free one) and returns the bound port.
  int start(int port = 0, const std::string& host = "127.0.0.1");
  void stop();
  /// Blocks the calling thread serving requests (for the standalone tool).
  void listen_blocking(int port, const std::string& host = "0.0.0.0");

  /// Before ready, every endpoint answers 503.
  void set_ready(bool ready) { ready_ = ready; }
  /// The next `n` gradient requests answer 500 as if the model produced NaN.
  void fail_next(int n) { failures_ = n; }

  int port() const { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int request_count() const { return requests_; }
  std::vector<std::uint64_t> seeds_seen() const;

 private:
  void install_routes();

  RasterImage target_;
  std::string model_id_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<bool> ready_{true};
  std::atomic<int> failures_{0};
  std::atomic<int> requests_{0};
  int port_ = 0;
  mutable std::mutex seeds_mutex_;
  std::vector<std::uint64_t> seeds_;
};

}  // namespace wordasimage
