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

#include "erasekit/diffusion/content_init.hpp"

#include <exception>

namespace erasekit::diffusion {

ContentInit content_initialize(const Image& image, const Mask& mask,
                               CoarseInpainterClient& inpainter,
                               VaeClient& vae) {
  if (!mask.is_binary()) fail(ErrorCode::kInvalidArgument, "mask not binary");
  if (mask.height() != image.height() || mask.width() != image.width()) {
    fail(ErrorCode::kShapeMismatch, "mask and image extents differ");
  }
  ContentInit out;
  out.preprocessed = image;
  if (mask.any()) {
    Image filled;
    try {
      filled = inpainter.inpaint(image, mask);
    } catch (const Error& e) {
      fail(ErrorCode::kInpainterUnavailable, e.what());
    } catch (const std::exception& e) {
      fail(ErrorCode::kInpainterUnavailable, e.what());
    }
    if (!filled.same_shape(image)) {
      fail(ErrorCode::kInpainterUnavailable,
           "inpainter returned " + filled.shape_string() + " for " +
               image.shape_string());
    }
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        if (!mask.test(y, x)) continue;
        for (int c = 0; c < image.channels(); ++c) {
          out.preprocessed.at(y, x, c) = filled.at(y, x, c);
        }
      }
    }
  }
  try {
    out.latent = LatentState{vae.encode(out.preprocessed), 0};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEncodeFailure) throw;
    fail(ErrorCode::kEncodeFailure, e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::kEncodeFailure, e.what());
  }
  return out;
}

}  // namespace erasekit::diffusion
