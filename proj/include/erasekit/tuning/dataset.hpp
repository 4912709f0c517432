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

#include <span>
#include <vector>

#include "erasekit/diffusion/clients.hpp"
#include "erasekit/olrd/builder.hpp"
#include "erasekit/tuning/trainer.hpp"

namespace erasekit::tuning {

// Encodes OLRD records into training samples: z_0 = E(I), the masked
// latent is E(I~ with the footprint zeroed), and the mask is the footprint
// pooled to the latent grid. Records whose caption failed fall back to the
// simple prompt on the caption branch. Throws kCorruptDataset on records
// without tags.
std::vector<TrainSample> training_samples(
    std::span<const olrd::ErasureSample> records, diffusion::VaeClient& vae);

}  // namespace erasekit::tuning
