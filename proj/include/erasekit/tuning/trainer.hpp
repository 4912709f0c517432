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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "erasekit/common/array3.hpp"
#include "erasekit/diffusion/schedule.hpp"
#include "erasekit/tuning/prompt.hpp"
#include "erasekit/tuning/text_encoder.hpp"
#include "erasekit/tuning/toy_denoiser.hpp"

namespace erasekit::tuning {

struct TrainSample {
  std::string id;
  Latent original_latent;  // z_0, h x w x 4
  Latent masked_latent;    // h x w x 4
  Latent mask;             // h x w x 1, binary
  std::string simple_prompt;
  std::string caption_prompt;
};

struct PlaceholderToken {
  std::string literal{kPlaceholder};
  Eigen::VectorXd embedding;
  bool trainable = true;
};

// Injected randomness for one sample of a step.
struct StepDraw {
  int t = 1;    // training step in [1, T]
  Latent eps;   // same shape as the sample latent
  double u = 0;  // prompt-mix draw
};

struct StepResult {
  double loss = 0.0;
  Eigen::VectorXd grad_embedding;
  std::map<std::string, LoraGradient> grad_adapters;
  std::map<std::string, Eigen::MatrixXd> grad_frozen;  // all zero
};

// Seed words whose mean embedding starts v_*.
inline const std::vector<std::string>& placeholder_seed_words() {
  static const std::vector<std::string> words{"background", "scenery"};
  return words;
}

PlaceholderToken initial_placeholder(const TextEncoderClient& encoder);

// Draws {t, eps, u} for each batch entry from `rng`.
std::vector<StepDraw> draw_step(std::span<const TrainSample> batch,
                                const diffusion::NoiseSchedule& schedule,
                                Rng& rng);

// Mean over the batch of mean((eps - eps_hat)^2) on the 9-channel input built
// from forward_noise(z_0, t, eps). The encoder's placeholder row is set to
// the token embedding before prompts are encoded. Throws kNonFiniteLoss.
StepResult training_step(std::span<const TrainSample> batch,
                         const PlaceholderToken& token,
                         const AdapterMap& adapters,
                         const diffusion::NoiseSchedule& schedule,
                         const ToyDenoiser& denoiser,
                         TextEncoderClient& encoder,
                         std::span<const StepDraw> draws);

// Forward-only value of the same objective for any noise predictor.
double step_loss(std::span<const TrainSample> batch,
                 const PlaceholderToken& token,
                 const diffusion::NoiseSchedule& schedule,
                 const diffusion::NoisePredictor& predictor,
                 TextEncoderClient& encoder, std::span<const StepDraw> draws);

// Adam with bias correction over named parameters.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void begin_step() { ++t_; }
  void update(const std::string& name, Eigen::Ref<Eigen::MatrixXd> param,
              const Eigen::MatrixXd& grad);

  int t() const noexcept { return t_; }
  double lr() const noexcept { return lr_; }
  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& j);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::map<std::string, Eigen::MatrixXd> m_;
  std::map<std::string, Eigen::MatrixXd> v_;
};

// Textual-inversion warm start: only v_* is optimized; adapters are absent
// (equivalently, frozen at their zero-initialized identity). Throws
// kDivergedLoss on a non-finite loss and kCorruptDataset on an empty subset.
PlaceholderToken init_placeholder(std::span<const TrainSample> subset,
                                  int steps, const ToyDenoiser& denoiser,
                                  TextEncoderClient& encoder,
                                  const diffusion::NoiseSchedule& schedule,
                                  std::uint64_t seed, double lr = 1e-4,
                                  std::vector<double>* losses = nullptr);

struct TrainConfig {
  int steps = 500;
  double lr = 1e-4;
  int rank = 4;
  double lora_scale = 1.0;
  double lora_down_std = 2.0;
  int batch = 1;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 disables checkpoints
  bool shuffle = true;
  // Fixed training step for every draw; 0 draws t uniformly in [1, T].
  int fixed_t = 0;
  // Reuse the batch and draws of step 0 at every step (overfit runs).
  bool fixed_batch = false;

  std::string hash() const;
};

struct TrainCheckpoint {
  int format_version = 1;
  int step = 0;  // completed steps
  std::string config_hash;
  PlaceholderToken token;
  AdapterMap adapters;
  nlohmann::json optimizer;
};

nlohmann::json checkpoint_to_json(const TrainCheckpoint& ckpt);
TrainCheckpoint checkpoint_from_json(const nlohmann::json& j);

class CheckpointSink {
 public:
  virtual ~CheckpointSink() = default;
  virtual void write(const TrainCheckpoint& ckpt) = 0;
};

// Writes `checkpoint-{step}.json` and `latest.json` under a directory via a
// temporary file and rename. Throws kCheckpointWriteFailure.
class FileCheckpointSink final : public CheckpointSink {
 public:
  explicit FileCheckpointSink(std::filesystem::path dir);
  void write(const TrainCheckpoint& ckpt) override;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

TrainCheckpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
  PlaceholderToken token;
  AdapterMap adapters;
  std::vector<double> losses;  // one per executed step
  int final_step = 0;
};

using LossTelemetry = std::function<void(int step, double loss)>;

// Runs config.steps optimizer steps (counted from zero, including any
// resumed ones). Step k draws all its randomness from Rng({seed, k}) and
// its batch from a per-epoch seeded shuffle, so a resumed run reproduces the
// uninterrupted one. `initial_token` seeds v_* when not resuming; when
// absent v_* starts from the seed-word mean.
TrainResult train(const TrainConfig& config,
                  std::span<const TrainSample> dataset,
                  const ToyDenoiser& denoiser, TextEncoderClient& encoder,
                  const diffusion::NoiseSchedule& schedule,
                  CheckpointSink* sink = nullptr,
                  const TrainCheckpoint* resume = nullptr,
                  const LossTelemetry& telemetry = {},
                  const PlaceholderToken* initial_token = nullptr);

// Indices of the samples used at `step`.
std::vector<std::size_t> batch_indices(const TrainConfig& config,
                                       std::size_t dataset_size, int step);

}  // namespace erasekit::tuning
