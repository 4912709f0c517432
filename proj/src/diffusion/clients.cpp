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

#include "erasekit/diffusion/clients.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "erasekit/diffusion/conditioning.hpp"

namespace erasekit::diffusion {

Image MeanFillInpainter::inpaint(const Image& image, const Mask& mask) {
  ++calls_;
  double sum[3] = {0, 0, 0};
  std::size_t n = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (mask.test(y, x)) continue;
      for (int c = 0; c < 3; ++c) sum[c] += image.at(y, x, c);
      ++n;
    }
  }
  Image out = image;
  if (n == 0) return out;
  std::uint8_t fill[3];
  for (int c = 0; c < 3; ++c) {
    fill[c] = static_cast<std::uint8_t>(std::lround(sum[c] / static_cast<double>(n)));
  }
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!mask.test(y, x)) continue;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = fill[c];
    }
  }
  return out;
}

Latent PoolingVae::encode(const Image& image) {
  constexpr int f = kLatentDownscale;
  if (image.channels() != 3 || image.height() % f != 0 ||
      image.width() % f != 0 || image.empty()) {
    fail(ErrorCode::kEncodeFailure,
         "image " + image.shape_string() + " is not RGB with dims divisible by 8");
  }
  Latent z(image.height() / f, image.width() / f, 4);
  for (int by = 0; by < z.height(); ++by) {
    for (int bx = 0; bx < z.width(); ++bx) {
      double mean[3] = {0, 0, 0};
      double luma_sum = 0, luma_sq = 0;
      for (int y = by * f; y < (by + 1) * f; ++y) {
        for (int x = bx * f; x < (bx + 1) * f; ++x) {
          for (int c = 0; c < 3; ++c) mean[c] += image.at(y, x, c);
          const double l = 0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) +
                           0.114 * image.at(y, x, 2);
          luma_sum += l;
          luma_sq += l * l;
        }
      }
      const double n = f * f;
      for (int c = 0; c < 3; ++c) z.at(by, bx, c) = mean[c] / n / 127.5 - 1.0;
      const double mu = luma_sum / n;
      const double var = std::max(0.0, luma_sq / n - mu * mu);
      z.at(by, bx, 3) = std::sqrt(var) / 64.0;
    }
  }
  return z;
}

Image PoolingVae::decode(const Latent& latent) {
  constexpr int f = kLatentDownscale;
  if (latent.channels() != 4) {
    fail(ErrorCode::kDecodeFailure, "latent must have 4 channels");
  }
  Image out(latent.height() * f, latent.width() * f, 3);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = (latent.at(y / f, x / f, c) + 1.0) * 127.5;
        out.at(y, x, c) =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace erasekit::diffusion
