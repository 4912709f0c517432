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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "erasekit/common/error.hpp"

namespace erasekit {

// Dense height x width x channels array, channel-interleaved, row-major.
// Pixel (y, x) channel c lives at ((y * width) + x) * channels + c.
template <typename T>
class Array3 {
 public:
  Array3() = default;
  Array3(int height, int width, int channels, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 0) {
      fail(ErrorCode::kInvalidArgument, "negative array dimension");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  const T& at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const Array3& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }
  bool same_extent(int height, int width) const noexcept {
    return height_ == height && width_ == width;
  }

  std::string shape_string() const {
    return std::to_string(height_) + "x" + std::to_string(width_) + "x" +
           std::to_string(channels_);
  }

  friend bool operator==(const Array3&, const Array3&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

// 8-bit RGB image.
using Image = Array3<std::uint8_t>;
// Latent tensors are kept in double internally; the process boundary uses
// 32-bit floats.
using Latent = Array3<double>;

// Binary mask. Value 1 means "erase / regenerate here" everywhere in the
// library.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, std::uint8_t fill = 0)
      : cells_(height, width, 1, fill) {}

  int height() const noexcept { return cells_.height(); }
  int width() const noexcept { return cells_.width(); }
  std::size_t pixels() const noexcept { return cells_.pixels(); }

  std::uint8_t& at(int y, int x) { return cells_.at(y, x); }
  std::uint8_t at(int y, int x) const { return cells_.at(y, x); }
  bool test(int y, int x) const { return cells_.at(y, x) != 0; }
  bool in_bounds(int y, int x) const noexcept {
    return y >= 0 && x >= 0 && y < height() && x < width();
  }

  std::span<std::uint8_t> values() noexcept { return cells_.values(); }
  std::span<const std::uint8_t> values() const noexcept {
    return cells_.values();
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto v : cells_.values()) n += (v != 0);
    return n;
  }
  bool any() const noexcept { return count() > 0; }
  bool is_binary() const noexcept {
    for (auto v : cells_.values()) {
      if (v > 1) return false;
    }
    return true;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Array3<std::uint8_t> cells_;
};

}  // namespace erasekit
