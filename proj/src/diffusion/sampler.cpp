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

#include "erasekit/diffusion/sampler.hpp"

#include <cmath>
#include <exception>
#include <string>

namespace erasekit::diffusion {

LatentState denoise_loop(const LatentState& z_init,
                         const ConditioningBundle& cond,
                         const NoiseSchedule& schedule,
                         const NoisePredictor& denoiser,
                         SelfAttentionHook* refocus_hook) {
  if (z_init.t < 0 || z_init.t > schedule.steps) {
    fail(ErrorCode::kInvalidArgument,
         "initial step " + std::to_string(z_init.t) + " outside schedule");
  }
  LatentState state = z_init;
  for (int k = z_init.t; k >= 1; --k) {
    const double t_norm = static_cast<double>(k) / schedule.steps;
    SelfAttentionHook* hook =
        refocus_hook != nullptr && refocus_hook->active(t_norm) ? refocus_hook
                                                                : nullptr;
    const Latent x9 = assemble_unet_input(state.z, cond);
    Latent eps;
    try {
      eps = denoiser(x9, schedule.timestep(k), cond.text, hook, t_norm);
    } catch (const std::exception& e) {
      fail(ErrorCode::kDenoiserFailure,
           "step " + std::to_string(k) + ": " + e.what());
    }
    if (!eps.same_shape(state.z)) {
      fail(ErrorCode::kDenoiserFailure,
           "step " + std::to_string(k) + ": prediction shape " +
               eps.shape_string());
    }
    const double ab = schedule.alpha_bar(k);
    const double ab_prev = schedule.alpha_bar(k - 1);
    const double sqrt_ab = std::sqrt(ab);
    const double sqrt_1mab = std::sqrt(1.0 - ab);
    const double sqrt_ab_prev = std::sqrt(ab_prev);
    const double sqrt_1mab_prev = std::sqrt(1.0 - ab_prev);
    auto z = state.z.values();
    auto e = eps.values();
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!std::isfinite(e[i])) {
        fail(ErrorCode::kDenoiserFailure,
             "step " + std::to_string(k) + ": non-finite prediction");
      }
      const double x0 = (z[i] - sqrt_1mab * e[i]) / sqrt_ab;
      z[i] = sqrt_ab_prev * x0 + sqrt_1mab_prev * e[i];
    }
    state.t = k - 1;
  }
  return state;
}

}  // namespace erasekit::diffusion
