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

#include "erasekit/tuning/dataset.hpp"

#include "erasekit/common/error.hpp"
#include "erasekit/diffusion/conditioning.hpp"

namespace erasekit::tuning {

std::vector<TrainSample> training_samples(
    std::span<const olrd::ErasureSample> records, diffusion::VaeClient& vae) {
  std::vector<TrainSample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.tags.empty()) {
      fail(ErrorCode::kCorruptDataset, "record " + r.id + " has no background tags");
    }
    Image masked = r.blended;
    for (int y = 0; y < masked.height(); ++y) {
      for (int x = 0; x < masked.width(); ++x) {
        if (!r.shifted_mask.test(y, x)) continue;
        for (int c = 0; c < masked.channels(); ++c) masked.at(y, x, c) = 0;
      }
    }
    TrainSample s;
    s.id = r.id;
    s.original_latent = vae.encode(r.original);
    s.masked_latent = vae.encode(masked);
    s.mask = diffusion::latent_mask(r.shifted_mask);
    s.simple_prompt = build_simple_prompt(r.tags);
    s.caption_prompt = r.caption_failed || r.caption.empty() ? s.simple_prompt
                                                             : r.caption;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace erasekit::tuning
