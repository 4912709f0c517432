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

#include "erasekit/diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "erasekit/common/rng.hpp"

namespace erasekit::diffusion {

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  if (t < 0 || t > steps) {
    fail(ErrorCode::kInvalidArgument,
         "step " + std::to_string(t) + " outside [0, " + std::to_string(steps) +
             "]");
  }
  return alpha_bars[t - 1];
}

int NoiseSchedule::timestep(int t) const {
  if (t < 1 || t > steps) {
    fail(ErrorCode::kInvalidArgument, "step " + std::to_string(t));
  }
  return timesteps[t - 1];
}

void validate(const NoiseSchedule& s) {
  const auto n = static_cast<std::size_t>(s.steps);
  if (s.steps < 1 || s.betas.size() != n || s.alphas.size() != n ||
      s.alpha_bars.size() != n || s.timesteps.size() != n) {
    fail(ErrorCode::kInvalidSchedule, "inconsistent schedule lengths");
  }
  double prev = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(s.betas[i] > 0.0 && s.betas[i] < 1.0)) {
      fail(ErrorCode::kInvalidSchedule,
           "beta[" + std::to_string(i + 1) + "] outside (0,1)");
    }
    if (!(s.alpha_bars[i] > 0.0 && s.alpha_bars[i] < prev)) {
      fail(ErrorCode::kInvalidSchedule,
           "alpha_bar not strictly decreasing at step " + std::to_string(i + 1));
    }
    prev = s.alpha_bars[i];
  }
}

NoiseSchedule build_schedule(int steps, double beta_start, double beta_end,
                             ScheduleKind kind) {
  if (steps < 1) fail(ErrorCode::kInvalidSchedule, "T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    fail(ErrorCode::kInvalidSchedule,
         "require 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.betas.resize(steps);
  s.alphas.resize(steps);
  s.alpha_bars.resize(steps);
  s.timesteps.resize(steps);
  const double lo = kind == ScheduleKind::kLinear ? beta_start : std::sqrt(beta_start);
  const double hi = kind == ScheduleKind::kLinear ? beta_end : std::sqrt(beta_end);
  double running = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    double beta = lo + (hi - lo) * frac;
    if (kind == ScheduleKind::kScaledLinear) beta *= beta;
    s.betas[i] = beta;
    s.alphas[i] = 1.0 - beta;
    running *= s.alphas[i];
    s.alpha_bars[i] = running;
    s.timesteps[i] = i + 1;
  }
  validate(s);
  return s;
}

NoiseSchedule default_schedule() {
  return build_schedule(1000, 0.00085, 0.012, ScheduleKind::kScaledLinear);
}

NoiseSchedule subsample(const NoiseSchedule& train, int steps) {
  if (steps < 1 || steps > train.steps) {
    fail(ErrorCode::kInvalidSchedule,
         "sampling steps must lie in [1, " + std::to_string(train.steps) + "]");
  }
  NoiseSchedule s;
  s.steps = steps;
  double prev = 1.0;
  for (int k = 1; k <= steps; ++k) {
    const int tau = static_cast<int>(
        std::lround(static_cast<double>(k) * train.steps / steps));
    const double ab = train.alpha_bar(tau);
    s.timesteps.push_back(tau);
    s.alpha_bars.push_back(ab);
    s.alphas.push_back(ab / prev);
    s.betas.push_back(1.0 - ab / prev);
    prev = ab;
  }
  validate(s);
  return s;
}

LatentState forward_noise(const LatentState& z0, int t_prime,
                          const NoiseSchedule& schedule, const Latent& eps) {
  if (!eps.same_shape(z0.z)) {
    fail(ErrorCode::kShapeMismatch, "eps " + eps.shape_string() +
                                        " vs z0 " + z0.z.shape_string());
  }
  if (t_prime < 1 || t_prime > schedule.steps) {
    fail(ErrorCode::kInvalidArgument,
         "t' = " + std::to_string(t_prime) + " outside [1, T]");
  }
  const double ab = schedule.alpha_bar(t_prime);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  LatentState out{Latent(z0.z.height(), z0.z.width(), z0.z.channels()), t_prime};
  auto dst = out.z.values();
  auto src = z0.z.values();
  auto e = eps.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = signal * src[i] + noise * e[i];
  }
  return out;
}

int steps_from_strength(int total_steps, double strength) {
  if (total_steps < 1) fail(ErrorCode::kInvalidArgument, "T must be >= 1");
  if (!(strength > 0.0 && strength <= 1.0)) {
    fail(ErrorCode::kInvalidStrength,
         "strength " + std::to_string(strength) + " outside (0, 1]");
  }
  // The tolerance keeps decimal strengths such as 0.29 from flooring one
  // step short through binary rounding (100 * 0.29 == 28.999...).
  const int steps =
      static_cast<int>(std::floor(total_steps * strength + 1e-9));
  return steps < 1 ? 1 : steps;
}

Latent gaussian_latent(int height, int width, int channels,
                       unsigned long long seed) {
  Latent out(height, width, channels);
  Rng rng(seed);
  for (auto& v : out.values()) v = rng.normal();
  return out;
}

}  // namespace erasekit::diffusion
