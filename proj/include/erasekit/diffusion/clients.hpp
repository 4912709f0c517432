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

#include "erasekit/common/array3.hpp"

namespace erasekit::diffusion {

// Pixel-space inpainter used for coarse content initialization (a GAN
// inpainter in production). Must return an image with the input's extent.
class CoarseInpainterClient {
 public:
  virtual ~CoarseInpainterClient() = default;
  virtual Image inpaint(const Image& image, const Mask& mask) = 0;
};

// Image <-> latent autoencoder. encode divides each spatial dim by 8;
// decode(encode(x)) has the extent of x.
class VaeClient {
 public:
  virtual ~VaeClient() = default;
  virtual Latent encode(const Image& image) = 0;
  virtual Image decode(const Latent& latent) = 0;
};

// Deterministic in-process stand-ins used at desk scale and in tests.

// Returns the image unchanged.
class IdentityInpainter final : public CoarseInpainterClient {
 public:
  Image inpaint(const Image& image, const Mask&) override { return image; }
};

// Fills masked pixels with the per-channel mean of the unmasked pixels.
class MeanFillInpainter final : public CoarseInpainterClient {
 public:
  Image inpaint(const Image& image, const Mask& mask) override;
  int calls() const noexcept { return calls_; }

 private:
  int calls_ = 0;
};

// 8x8 block-pooling autoencoder: latent channels 0-2 are the block's mean
// RGB mapped to [-1, 1], channel 3 its luma standard deviation / 64.
// Decoding paints each block with its mean color.
class PoolingVae final : public VaeClient {
 public:
  Latent encode(const Image& image) override;
  Image decode(const Latent& latent) override;
};

}  // namespace erasekit::diffusion
