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
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "erasekit/common/array3.hpp"
#include "erasekit/common/error.hpp"
#include "erasekit/diffusion/clients.hpp"
#include "erasekit/diffusion/sampler.hpp"
#include "erasekit/refocus/modulation.hpp"
#include "erasekit/service/segmenter.hpp"
#include "erasekit/tuning/text_encoder.hpp"

namespace erasekit::service {

struct EraseConfig {
  double strength = 0.9;
  int steps = 50;  // sampling steps over the 1000-step training schedule
  double guidance = 7.5;
  std::uint64_t seed = 0;
  refocus::RefocusConfig refocus;
  int max_side = 2048;
  int feather = 4;

  // Throws kInvalidArgument / kInvalidStrength.
  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static EraseConfig from_json(const nlohmann::json& j);
  std::string hash() const;
};

// Pipeline stage names used to tag failures.
inline constexpr std::string_view kStageSegment = "segment";
inline constexpr std::string_view kStageInit = "init";
inline constexpr std::string_view kStageEncode = "encode";
inline constexpr std::string_view kStageDenoise = "denoise";
inline constexpr std::string_view kStageDecode = "decode";
inline constexpr std::string_view kStageComposite = "composite";

// Failure of one pipeline stage; code() is the underlying error code.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCode code, const std::string& detail)
      : Error(code, "[" + stage + "] " + detail),
        stage_(std::move(stage)),
        detail_(detail) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string stage_;
  std::string detail_;
};

struct EraseClients {
  const SegmenterClient* segmenter = nullptr;
  diffusion::CoarseInpainterClient* inpainter = nullptr;
  diffusion::VaeClient* vae = nullptr;
  tuning::TextEncoderClient* text_encoder = nullptr;  // v_* row loaded
  diffusion::NoisePredictor denoiser;                 // adapters bound
};

struct EraseTrace {
  std::string prompt;
  int sampling_steps = 0;
  int start_step = 0;  // T'
  int refocus_invocations = 0;
  std::size_t uncovered_pixels = 0;
  Image preprocessed;  // after content initialization (padded extent)
  Image decoded;       // raw decoder output (padded extent)
};

// Checks mask shape, binarity, non-emptiness (kEmptyMask) and the size limit
// (kOversizeInput). No client is touched.
void validate_request(const Image& image, const Mask& mask,
                      const EraseConfig& config);

// Per-pixel blend weight of the generated image: 1 on the mask, falling as
// 1 - d / (feather + 1) with Euclidean distance d to the nearest mask pixel,
// and exactly 0 beyond `feather` pixels.
std::vector<double> feather_weights(const Mask& mask, int feather);

// round(w * generated + (1 - w) * original); pixels with w = 0 are copied.
Image composite(const Image& original, const Image& generated,
                const Mask& mask, int feather);

// Called with each stage name as the stage starts.
using StageListener = std::function<void(std::string_view stage)>;

// segment -> label map -> content init -> forward noise to T' ->
// guided, refocused DDIM -> decode -> composite. Inputs are edge-padded to
// a multiple of 16 and cropped back. Stage failures are rethrown as
// StageError.
Image erase(const Image& image, const Mask& mask, const EraseConfig& config,
            const EraseClients& clients, EraseTrace* trace = nullptr,
            const StageListener& on_stage = {});

}  // namespace erasekit::service
