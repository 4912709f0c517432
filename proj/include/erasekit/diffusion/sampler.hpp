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

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "erasekit/diffusion/conditioning.hpp"
#include "erasekit/diffusion/schedule.hpp"

namespace erasekit::diffusion {

// What a self-attention layer tells the hook about the call.
struct AttentionSite {
  int layer = 0;
  int grid_height = 0;  // token grid of the layer, row-major
  int grid_width = 0;
  double t_normalized = 1.0;
};

// Plug-in that may add a logit matrix M to a self-attention layer. The
// denoiser passes raw query-key similarities (N x N, before the 1/sqrt(d)
// scaling); a returned M is added in that same logit space.
class SelfAttentionHook {
 public:
  virtual ~SelfAttentionHook() = default;
  // Window predicate; the loop only hands the hook to the denoiser on steps
  // it admits.
  virtual bool active(double t_normalized) const = 0;
  virtual std::optional<Eigen::MatrixXd> modulation(
      const AttentionSite& site, const Eigen::MatrixXd& raw_scores) = 0;
};

// Epsilon predictor: (9-channel input, denoiser timestep, text conditioning,
// optional hook, normalized time) -> h x w x 4 noise estimate.
using NoisePredictor = std::function<Latent(
    const Latent& unet_input, int timestep, const Eigen::MatrixXd& text,
    SelfAttentionHook* hook, double t_normalized)>;

// Deterministic DDIM (eta = 0) loop from step z_init.t down to 0 on the
// given sampling schedule. Step k has normalized time k / schedule.steps.
// Errors thrown by the predictor are rethrown as kDenoiserFailure tagged
// with the step index.
LatentState denoise_loop(const LatentState& z_init,
                         const ConditioningBundle& cond,
                         const NoiseSchedule& schedule,
                         const NoisePredictor& denoiser,
                         SelfAttentionHook* refocus_hook = nullptr);

}  // namespace erasekit::diffusion
