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

#include "erasekit/diffusion/conditioning.hpp"

#include <string>

namespace erasekit::diffusion {

Latent assemble_unet_input(const Latent& z, const ConditioningBundle& cond) {
  const int h = z.height();
  const int w = z.width();
  if (z.channels() != kLatentChannels ||
      cond.z_masked.channels() != kLatentChannels ||
      cond.mask.channels() != 1) {
    fail(ErrorCode::kShapeMismatch, "expected 4 + 4 + 1 channels");
  }
  if (!cond.z_masked.same_extent(h, w) || !cond.mask.same_extent(h, w)) {
    fail(ErrorCode::kShapeMismatch,
         "z " + z.shape_string() + ", z_masked " + cond.z_masked.shape_string() +
             ", mask " + cond.mask.shape_string());
  }
  Latent out(h, w, kUnetInputChannels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 4; ++c) {
        out.at(y, x, c) = z.at(y, x, c);
        out.at(y, x, 4 + c) = cond.z_masked.at(y, x, c);
      }
      out.at(y, x, 8) = cond.mask.at(y, x, 0);
    }
  }
  return out;
}

Latent latent_mask(const Mask& mask, int factor) {
  if (factor < 1 || mask.height() % factor != 0 || mask.width() % factor != 0) {
    fail(ErrorCode::kShapeMismatch,
         "mask " + std::to_string(mask.height()) + "x" +
             std::to_string(mask.width()) + " not divisible by " +
             std::to_string(factor));
  }
  Latent out(mask.height() / factor, mask.width() / factor, 1);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.test(y, x)) out.at(y / factor, x / factor) = 1.0;
    }
  }
  return out;
}

}  // namespace erasekit::diffusion
