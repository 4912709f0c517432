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

#include "erasekit/service/desk.hpp"

#include <cstdlib>

#include "erasekit/common/error.hpp"
#include "erasekit/tuning/trainer.hpp"

namespace erasekit::service {

DeskStack::DeskStack() {
  encoder_.set_embedding_row(encoder_.placeholder_id(),
                             tuning::initial_placeholder(encoder_).embedding);
}

void DeskStack::load_tuned(const std::filesystem::path& path) {
  const auto file = std::filesystem::is_directory(path) ? path / "latest.json" : path;
  const auto ckpt = tuning::load_checkpoint(file);
  for (const auto& [name, a] : ckpt.adapters) {
    const auto& base = denoiser_.frozen();
    const auto it = base.find(name);
    if (it == base.end() || a.up.rows() != it->second.rows() ||
        a.down.cols() != it->second.cols()) {
      fail(ErrorCode::kShapeMismatch, "checkpoint adapter " + name + " does not fit");
    }
  }
  encoder_.set_embedding_row(encoder_.placeholder_id(), ckpt.token.embedding);
  adapters_ = ckpt.adapters;
  tuned_ = true;
}

EraseClients DeskStack::clients() {
  EraseClients c;
  c.segmenter = &segmenter_;
  c.inpainter = &inpainter_;
  c.vae = &vae_;
  c.text_encoder = &encoder_;
  c.denoiser = denoiser_.predictor(&adapters_);
  return c;
}

Environment read_environment() {
  Environment env;
  if (const char* dir = std::getenv("ERASER_MODEL_DIR"); dir != nullptr && *dir != '\0') {
    env.model_dir = std::filesystem::path(dir);
  }
  if (const char* dev = std::getenv("ERASER_DEVICE"); dev != nullptr && *dev != '\0') {
    env.device = dev;
  }
  if (env.device != "cpu") {
    fail(ErrorCode::kInvalidArgument, "unsupported ERASER_DEVICE " + env.device);
  }
  return env;
}

}  // namespace erasekit::service
