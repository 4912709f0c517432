// Copyright 2026 The erasekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "erasekit/common/codec.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>
#include <openssl/sha.h>

namespace erasekit {
namespace {

struct WriteSink {
  std::vector<std::uint8_t>* out;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* sink = static_cast<WriteSink*>(png_get_io_ptr(png));
  sink->out->insert(sink->out->end(), data, data + len);
}

void png_flush_cb(png_structp) {}

struct ReadSource {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->bytes.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(data, src->bytes.data() + src->pos, len);
  src->pos += len;
}

std::vector<std::uint8_t> encode_raw(const std::uint8_t* pixels, int width,
                                     int height, int channels) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) fail(ErrorCode::kIoFailure, "png_create_write_struct");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  WriteSink sink{&out};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIoFailure, "PNG encoding failed");
  }
  png_set_write_fn(png, &sink, png_write_cb, png_flush_cb);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// Decodes to 8-bit with the requested channel count (1 = gray, 3 = RGB).
std::vector<std::uint8_t> decode_raw(std::span<const std::uint8_t> bytes,
                                     int want_channels, int& width,
                                     int& height) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    fail(ErrorCode::kIoFailure, "not a PNG stream");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) fail(ErrorCode::kIoFailure, "png_create_read_struct");
  png_infop info = png_create_info_struct(png);
  ReadSource src{bytes, 0};
  std::vector<std::uint8_t> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIoFailure, "PNG decoding failed");
  }
  png_set_read_fn(png, &src, png_read_cb);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  const bool is_gray =
      color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
  if (want_channels == 3 && is_gray) png_set_gray_to_rgb(png);
  if (want_channels == 1 && !is_gray) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<std::size_t>(width) * want_channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kIoFailure, "unexpected PNG row layout");
  }
  pixels.resize(stride * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.channels() != 3) {
    fail(ErrorCode::kShapeMismatch, "encode_png expects RGB");
  }
  return encode_raw(image.data(), image.width(), image.height(), 3);
}

std::vector<std::uint8_t> encode_png(const Mask& mask) {
  std::vector<std::uint8_t> gray(mask.pixels());
  auto cells = mask.values();
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = cells[i] ? 255 : 0;
  return encode_raw(gray.data(), mask.width(), mask.height(), 1);
}

Image decode_png_rgb(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0;
  auto pixels = decode_raw(bytes, 3, w, h);
  Image image(h, w, 3);
  std::memcpy(image.data(), pixels.data(), pixels.size());
  return image;
}

Mask decode_png_mask(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0;
  auto pixels = decode_raw(bytes, 1, w, h);
  Mask mask(h, w);
  auto cells = mask.values();
  for (std::size_t i = 0; i < pixels.size(); ++i) cells[i] = pixels[i] ? 1 : 0;
  return mask;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoFailure, "short write to " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()),
                    text.size()});
}

void write_png(const std::filesystem::path& path, const Image& image) {
  write_file(path, encode_png(image));
}
void write_png(const std::filesystem::path& path, const Mask& mask) {
  write_file(path, encode_png(mask));
}
Image read_png_rgb(const std::filesystem::path& path) {
  return decode_png_rgb(read_file(path));
}
Mask read_png_mask(const std::filesystem::path& path) {
  return decode_png_mask(read_file(path));
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(bytes.data(), bytes.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c == '-') c = '+';  // accept the URL-safe alphabet too
    if (c == '_') c = '/';
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  while (clean.size() % 4 != 0) clean.push_back('=');
  std::vector<std::uint8_t> out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(),
                                reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) fail(ErrorCode::kInvalidArgument, "invalid base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  for (auto it = clean.rbegin(); it != clean.rend() && *it == '='; ++it) --len;
  out.resize(len);
  return out;
}

}  // namespace erasekit
