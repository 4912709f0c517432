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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "erasekit/diffusion/clients.hpp"
#include "erasekit/service/pipeline.hpp"
#include "erasekit/service/segmenter.hpp"
#include "erasekit/tuning/text_encoder.hpp"
#include "erasekit/tuning/toy_denoiser.hpp"

namespace erasekit::service {

// In-process client set for desk-scale runs: palette segmenter, mean-fill
// inpainter, pooling VAE, toy text encoder and toy denoiser. Tuned weights
// (v_* and adapters) are loaded from a training checkpoint when given.
class DeskStack {
 public:
  DeskStack();

  // Loads `latest.json` (or the file itself when `path` is a file).
  void load_tuned(const std::filesystem::path& path);
  bool tuned() const noexcept { return tuned_; }

  EraseClients clients();
  const SegmenterClient& segmenter() const noexcept { return segmenter_; }
  diffusion::MeanFillInpainter& inpainter() noexcept { return inpainter_; }
  tuning::ToyTextEncoder& text_encoder() noexcept { return encoder_; }
  const tuning::ToyDenoiser& denoiser() const noexcept { return denoiser_; }

 private:
  PaletteSegmenter segmenter_;
  diffusion::MeanFillInpainter inpainter_;
  diffusion::PoolingVae vae_;
  tuning::ToyTextEncoder encoder_;
  tuning::ToyDenoiser denoiser_;
  tuning::AdapterMap adapters_;
  bool tuned_ = false;
};

// Reads ERASER_MODEL_DIR and ERASER_DEVICE. Only the "cpu" device is
// available; anything else throws kInvalidArgument.
struct Environment {
  std::optional<std::filesystem::path> model_dir;
  std::string device = "cpu";
};
Environment read_environment();

}  // namespace erasekit::service
