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

#include <vector>

#include "erasekit/common/array3.hpp"

namespace erasekit::diffusion {

enum class ScheduleKind { kLinear, kScaledLinear };

// Variance schedule. Step indices are 1-based: step t uses betas[t - 1].
// alpha_bar(0) is defined as 1 (the clean signal).
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
  // Timestep index handed to the denoiser for each step. Identity for a
  // schedule built directly; the spaced training timesteps for a sampling
  // schedule produced by `subsample`.
  std::vector<int> timesteps;

  double alpha_bar(int t) const;
  int timestep(int t) const;
};

// Builds a schedule of `steps` betas between beta_start and beta_end.
// kLinear interpolates the betas directly, kScaledLinear interpolates their
// square roots. Throws kInvalidSchedule when the bounds are violated.
NoiseSchedule build_schedule(int steps, double beta_start, double beta_end,
                             ScheduleKind kind);

// Default training schedule of latent-diffusion inpainting models.
NoiseSchedule default_schedule();

// Evenly spaced sub-schedule with `steps` entries over a training schedule,
// ending on the final training step. Its betas are re-derived so the
// alpha_bars equal the training alpha_bars at the chosen timesteps.
NoiseSchedule subsample(const NoiseSchedule& train, int steps);

// Throws kInvalidSchedule unless the schedule invariants hold.
void validate(const NoiseSchedule& schedule);

struct LatentState {
  Latent z;
  int t = 0;
};

// sqrt(alpha_bar[t']) * z0 + sqrt(1 - alpha_bar[t']) * eps, elementwise.
LatentState forward_noise(const LatentState& z0, int t_prime,
                          const NoiseSchedule& schedule, const Latent& eps);

// floor(T * s), clamped to at least one step. Throws kInvalidStrength for s
// outside (0, 1].
int steps_from_strength(int total_steps, double strength);

// Standard normal latent of the given shape, drawn from `seed`.
Latent gaussian_latent(int height, int width, int channels,
                       unsigned long long seed);

}  // namespace erasekit::diffusion
