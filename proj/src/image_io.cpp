#include "wordasimage/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>
#include <openssl/sha.h>
#include <png.h>

#include "wordasimage/error.hpp"

namespace wordasimage {

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RasterImage& img, int channels) {
  if (channels != 1 && channels != 3) throw Error(ErrorCode::InvalidArgument, "PNG channels must be 1 or 3");
  std::vector<std::uint8_t> pixels(img.pixel_count() * channels);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto q = quantize(img.data[i]);
    for (int c = 0; c < channels; ++c) pixels[i * channels + c] = q;
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

RgbImage decode_png_rgb(std::span<const std::uint8_t> png) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, png.data(), png.size())) {
    throw Error(ErrorCode::ProtocolError, std::string("PNG decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::ProtocolError, std::string("PNG decode failed: ") + image.message);
  }
  RgbImage out{static_cast<int>(image.width), static_cast<int>(image.height), {}};
  out.data.resize(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) out.data[i] = pixels[i] / 255.0;
  return out;
}

RasterImage decode_png_gray(std::span<const std::uint8_t> png) {
  const RgbImage rgb = decode_png_rgb(png);
  RasterImage out(rgb.width, rgb.height, 0.0);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    out.data[i] = (rgb.data[3 * i] + rgb.data[3 * i + 1] + rgb.data[3 * i + 2]) / 3.0;
  }
  return out;
}

void write_png(const RasterImage& img, const std::filesystem::path& out) {
  const auto bytes = encode_png(img, 1);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + out.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RasterImage read_png_gray(const std::filesystem::path& in) {
  std::ifstream f(in, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot read " + in.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_png_gray(bytes);
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::ProtocolError, "base64 length is not a multiple of 4");
  constexpr std::string_view alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::size_t padding = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '=') {
      if (i + 2 < text.size()) throw Error(ErrorCode::ProtocolError, "misplaced base64 padding");
      ++padding;
    } else if (padding > 0 || alphabet.find(c) == std::string_view::npos) {
      throw Error(ErrorCode::ProtocolError, "invalid base64 character");
    }
  }
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::ProtocolError, "invalid base64 payload");
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xF]);
  }
  return out;
}

}  // namespace wordasimage
