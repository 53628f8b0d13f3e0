#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wordasimage/raster.hpp"

namespace wordasimage {

/// Interleaved 8-bit-derived RGB image with channel values in [0, 1].
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // HWC row-major
};

/// 8-bit PNG of a [0,1] raster; `channels` is 1 (gray) or 3 (replicated RGB).
std::vector<std::uint8_t> encode_png(const RasterImage& img, int channels = 1);
RgbImage decode_png_rgb(std::span<const std::uint8_t> png);

/// Channel mean of a decoded PNG.
RasterImage decode_png_gray(std::span<const std::uint8_t> png);

void write_png(const RasterImage& img, const std::filesystem::path& out);
RasterImage read_png_gray(const std::filesystem::path& in);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace wordasimage
