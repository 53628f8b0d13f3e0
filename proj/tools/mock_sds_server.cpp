// Standalone mock of the gradient service. MOCK_TARGET names a gray PNG
// target; PORT (default 8765) and MODEL_ID are optional.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "wordasimage/error.hpp"
#include "wordasimage/image_io.hpp"
#include "wordasimage/mock_service.hpp"

int main() {
  using namespace wordasimage;
  const char* target = std::getenv("MOCK_TARGET");
  if (!target || !*target) {
    std::fprintf(stderr, "MOCK_TARGET must name the target PNG\n");
    return 1;
  }
  const char* port_env = std::getenv("PORT");
  const char* model_env = std::getenv("MODEL_ID");
  const int port = port_env ? std::atoi(port_env) : 8765;
  try {
    MockSdsServer server(read_png_gray(target), model_env ? model_env : "mock-oracle");
    std::printf("mock gradient service on port %d\n", port);
    std::fflush(stdout);
    server.listen_blocking(port);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
