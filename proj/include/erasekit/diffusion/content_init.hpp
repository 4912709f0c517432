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

#include "erasekit/diffusion/clients.hpp"
#include "erasekit/diffusion/schedule.hpp"

namespace erasekit::diffusion {

struct ContentInit {
  Image preprocessed;  // input with the mask region coarsely filled
  LatentState latent;  // encode(preprocessed), t = 0
};

// Coarse pixel-space fill of the erase region followed by VAE encoding.
// Pixels outside the mask are copied from `image` regardless of what the
// inpainter returns there. An empty mask skips the inpainter.
ContentInit content_initialize(const Image& image, const Mask& mask,
                               CoarseInpainterClient& inpainter,
                               VaeClient& vae);

}  // namespace erasekit::diffusion
