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

#include <Eigen/Dense>

#include "erasekit/common/array3.hpp"
#include "erasekit/diffusion/schedule.hpp"

namespace erasekit::diffusion {

inline constexpr int kLatentChannels = 4;
inline constexpr int kUnetInputChannels = 9;
// VAE spatial downscale factor (512 px -> 64 latent cells).
inline constexpr int kLatentDownscale = 8;

// Conditioning for the 9-channel inpainting denoiser.
struct ConditioningBundle {
  Latent z_masked;       // h x w x 4, latent of the image with the mask cut out
  Latent mask;           // h x w x 1, values in {0, 1}; 1 = erase
  Eigen::MatrixXd text;  // tokens x width conditioning vectors
};

// Channel order [z_t (4) | z_masked (4) | mask (1)]; pure concatenation.
Latent assemble_unet_input(const Latent& z, const ConditioningBundle& cond);

// Pixel-resolution mask to latent resolution: a latent cell is 1 when any
// covered pixel is 1. Pixel dims must be multiples of `factor`.
Latent latent_mask(const Mask& mask, int factor = kLatentDownscale);

}  // namespace erasekit::diffusion
