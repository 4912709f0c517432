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

#include "erasekit/common/panoptic.hpp"

namespace erasekit::service {

// Panoptic segmentation backend. Must be deterministic per image and safe
// to call from several request threads.
class SegmenterClient {
 public:
  virtual ~SegmenterClient() = default;
  virtual Panoptic panoptic(const Image& image) const = 0;
};

// Assigns every pixel to the nearest toy-palette color; colors further than
// `max_distance` from every entry become the stuff category "background".
// Thing categories are split into 4-connected instances.
class PaletteSegmenter final : public SegmenterClient {
 public:
  explicit PaletteSegmenter(double max_distance = 48.0)
      : max_distance_(max_distance) {}
  Panoptic panoptic(const Image& image) const override;

 private:
  double max_distance_;
};

class UnavailableSegmenter final : public SegmenterClient {
 public:
  Panoptic panoptic(const Image& image) const override;
};

}  // namespace erasekit::service
