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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "erasekit/common/array3.hpp"
#include "erasekit/diffusion/sampler.hpp"
#include "erasekit/tuning/lora.hpp"

namespace erasekit::tuning {

using AdapterMap = std::map<std::string, LoraAdapter>;

struct ToyDenoiserConfig {
  int channels = 32;
  int text_width = 32;
  int heads = 2;
  std::uint64_t seed = 11;
};

struct LoraGradient {
  Eigen::MatrixXd down;
  Eigen::MatrixXd up;
};

// Gradient of the per-sample noise-prediction loss. `frozen` carries one
// entry per base weight; they are never accumulated and stay zero.
struct ToyGradients {
  Eigen::MatrixXd text;  // d loss / d conditioning rows
  std::map<std::string, LoraGradient> adapters;
  std::map<std::string, Eigen::MatrixXd> frozen;
};

// Small epsilon predictor over the 9-channel input:
//
//   e1 = silu(conv3x3(x))                 full grid
//   e2 = silu(conv3x3(avgpool2(e1)))      half grid
//   h  = conv3x3([up2(e2), e1]) + conv1x1(x) + time embedding
//   h += self_attention(h)                hookable, LoRA targets self.*
//   h += cross_attention(h, text)         LoRA targets cross.*
//   y  = conv1x1(silu(h))                 4 channels
//
// Grid height and width must be even. Base weights are drawn once from the
// seed and never change.
class ToyDenoiser {
 public:
  explicit ToyDenoiser(ToyDenoiserConfig cfg = {});

  const ToyDenoiserConfig& config() const noexcept { return cfg_; }
  const std::map<std::string, Eigen::MatrixXd>& frozen() const noexcept {
    return weights_;
  }

  // Layer ids that accept adapters, in a fixed order.
  static const std::vector<std::string>& adapter_targets();
  // Fresh adapter set for every target; `up` is zero.
  AdapterMap make_adapters(int rank, double scale, double down_std,
                           Rng& rng) const;

  Latent predict(const Latent& unet_input, int timestep,
                 const Eigen::MatrixXd& text, const AdapterMap* adapters,
                 diffusion::SelfAttentionHook* hook = nullptr,
                 double t_normalized = 1.0) const;

  // Binds an adapter set (may be null); the map must outlive the predictor.
  diffusion::NoisePredictor predictor(const AdapterMap* adapters) const;

  // mean((predict - target)^2) and its gradient with respect to the text
  // rows and every adapter in `adapters`.
  double loss_and_grad(const Latent& unet_input, int timestep,
                       const Eigen::MatrixXd& text, const Latent& target,
                       const AdapterMap& adapters, ToyGradients* grad) const;

 private:
  struct Tape;

  Eigen::MatrixXd effective(const std::string& name,
                            const AdapterMap* adapters) const;
  Eigen::MatrixXd trunk(const Latent& x, int timestep) const;
  Eigen::MatrixXd forward(const Latent& x, int timestep,
                          const Eigen::MatrixXd& text,
                          const AdapterMap* adapters,
                          diffusion::SelfAttentionHook* hook,
                          double t_normalized, Tape* tape) const;

  ToyDenoiserConfig cfg_;
  std::map<std::string, Eigen::MatrixXd> weights_;
};

}  // namespace erasekit::tuning
