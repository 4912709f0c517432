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

#include "erasekit/service/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "erasekit/common/codec.hpp"
#include "erasekit/diffusion/conditioning.hpp"
#include "erasekit/diffusion/content_init.hpp"
#include "erasekit/diffusion/schedule.hpp"
#include "erasekit/refocus/label_map.hpp"
#include "erasekit/tuning/prompt.hpp"

namespace erasekit::service {
namespace {

using nlohmann::json;

constexpr int kPadMultiple = 16;

ErrorCode default_code(std::string_view stage) {
  if (stage == kStageSegment) return ErrorCode::kSegmenterUnavailable;
  if (stage == kStageInit) return ErrorCode::kInpainterUnavailable;
  if (stage == kStageEncode) return ErrorCode::kEncodeFailure;
  if (stage == kStageDenoise) return ErrorCode::kDenoiserFailure;
  if (stage == kStageDecode) return ErrorCode::kDecodeFailure;
  return ErrorCode::kShapeMismatch;
}

template <typename Fn>
auto run_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(std::string(stage), e.code(), e.what());
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), default_code(stage), e.what());
  }
}

int round_up(int v, int m) { return (v + m - 1) / m * m; }

Image pad_edge(const Image& image, int h, int w) {
  Image out(h, w, image.channels());
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, image.height() - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(x, image.width() - 1);
      for (int c = 0; c < image.channels(); ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

Mask pad_zero(const Mask& mask, int h, int w) {
  Mask out(h, w);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) out.at(y, x) = mask.at(y, x);
  }
  return out;
}

Image crop(const Image& image, int h, int w) {
  Image out(h, w, image.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(y, x, c) = image.at(y, x, c);
    }
  }
  return out;
}

}  // namespace

void EraseConfig::validate() const {
  if (!(strength > 0.0 && strength <= 1.0)) {
    fail(ErrorCode::kInvalidStrength, "strength must lie in (0, 1]");
  }
  if (steps < 1 || steps > 1000) {
    fail(ErrorCode::kInvalidArgument, "steps must lie in [1, 1000]");
  }
  if (!(guidance >= 1.0) || !std::isfinite(guidance)) {
    fail(ErrorCode::kInvalidArgument, "guidance must be >= 1");
  }
  if (max_side < 16) fail(ErrorCode::kInvalidArgument, "max_side must be >= 16");
  if (feather < 0) fail(ErrorCode::kInvalidArgument, "feather must be >= 0");
  refocus.validate();
}

json EraseConfig::to_json() const {
  return {{"strength", strength},
          {"steps", steps},
          {"guidance", guidance},
          {"seed", seed},
          {"max_side", max_side},
          {"feather", feather},
          {"refocus",
           {{"lambda_pos", refocus.lambda_pos},
            {"lambda_neg", refocus.lambda_neg},
            {"window_lo", refocus.window_lo},
            {"window_hi", refocus.window_hi},
            {"enabled", refocus.enabled}}}};
}

EraseConfig EraseConfig::from_json(const json& j) {
  EraseConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "config must be an object");
  static const std::set<std::string> known{"strength", "steps", "guidance", "seed",
                                           "max_side", "feather", "refocus"};
  static const std::set<std::string> known_refocus{"lambda_pos", "lambda_neg", "window_lo",
                                                   "window_hi", "enabled"};
  try {
    for (const auto& [k, v] : j.items()) {
      if (!known.contains(k)) fail(ErrorCode::kInvalidArgument, "unknown config key " + k);
    }
    c.strength = j.value("strength", c.strength);
    c.steps = j.value("steps", c.steps);
    c.guidance = j.value("guidance", c.guidance);
    c.seed = j.value("seed", c.seed);
    c.max_side = j.value("max_side", c.max_side);
    c.feather = j.value("feather", c.feather);
    if (j.contains("refocus")) {
      const auto& r = j.at("refocus");
      for (const auto& [k, v] : r.items()) {
        if (!known_refocus.contains(k)) {
          fail(ErrorCode::kInvalidArgument, "unknown refocus key " + k);
        }
      }
      c.refocus.lambda_pos = r.value("lambda_pos", c.refocus.lambda_pos);
      c.refocus.lambda_neg = r.value("lambda_neg", c.refocus.lambda_neg);
      c.refocus.window_lo = r.value("window_lo", c.refocus.window_lo);
      c.refocus.window_hi = r.value("window_hi", c.refocus.window_hi);
      c.refocus.enabled = r.value("enabled", c.refocus.enabled);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string EraseConfig::hash() const {
  return sha256_hex(to_json().dump()).substr(0, 16);
}

void validate_request(const Image& image, const Mask& mask,
                      const EraseConfig& config) {
  if (image.empty() || image.channels() != 3) {
    fail(ErrorCode::kInvalidArgument, "expected a non-empty RGB image");
  }
  if (mask.height() != image.height() || mask.width() != image.width()) {
    fail(ErrorCode::kShapeMismatch, "mask and image extents differ");
  }
  if (!mask.is_binary()) fail(ErrorCode::kInvalidArgument, "mask must be binary");
  if (!mask.any()) fail(ErrorCode::kEmptyMask, "mask selects no pixels");
  if (std::max(image.height(), image.width()) > config.max_side) {
    fail(ErrorCode::kOversizeInput,
         "long side exceeds " + std::to_string(config.max_side) + " px");
  }
}

std::vector<double> feather_weights(const Mask& mask, int feather) {
  const int h = mask.height();
  const int w = mask.width();
  std::vector<double> out(mask.pixels(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.test(y, x)) {
        out[static_cast<std::size_t>(y) * w + x] = 1.0;
        continue;
      }
      int best = feather * feather + 1;
      for (int dy = -feather; dy <= feather; ++dy) {
        for (int dx = -feather; dx <= feather; ++dx) {
          const int d2 = dy * dy + dx * dx;
          if (d2 < best && mask.in_bounds(y + dy, x + dx) && mask.test(y + dy, x + dx)) {
            best = d2;
          }
        }
      }
      if (best <= feather * feather) {
        out[static_cast<std::size_t>(y) * w + x] =
            1.0 - std::sqrt(static_cast<double>(best)) / (feather + 1.0);
      }
    }
  }
  return out;
}

Image composite(const Image& original, const Image& generated,
                const Mask& mask, int feather) {
  if (!original.same_shape(generated) || mask.height() != original.height() ||
      mask.width() != original.width()) {
    fail(ErrorCode::kShapeMismatch, "composite inputs disagree in extent");
  }
  const auto weights = feather_weights(mask, feather);
  Image out = original;
  for (int y = 0; y < original.height(); ++y) {
    for (int x = 0; x < original.width(); ++x) {
      const double a = weights[static_cast<std::size_t>(y) * original.width() + x];
      if (a == 0.0) continue;
      for (int c = 0; c < original.channels(); ++c) {
        const double v = a * generated.at(y, x, c) + (1.0 - a) * original.at(y, x, c);
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

Image erase(const Image& image, const Mask& mask, const EraseConfig& config,
            const EraseClients& clients, EraseTrace* trace,
            const StageListener& on_stage) {
  const auto enter = [&](std::string_view stage) {
    if (on_stage) on_stage(stage);
  };
  config.validate();
  validate_request(image, mask, config);
  if (clients.segmenter == nullptr || clients.inpainter == nullptr ||
      clients.vae == nullptr || clients.text_encoder == nullptr ||
      !clients.denoiser) {
    fail(ErrorCode::kInvalidArgument, "erase needs every client");
  }
  const int ph = round_up(image.height(), kPadMultiple);
  const int pw = round_up(image.width(), kPadMultiple);
  const Image padded = pad_edge(image, ph, pw);
  const Mask pmask = pad_zero(mask, ph, pw);

  refocus::LabelMapDiagnostics diag;
  Panoptic panoptic;
  refocus::LabelMap labels;
  enter(kStageSegment);
  run_stage(kStageSegment, [&] {
    panoptic = clients.segmenter->panoptic(padded);
    if (panoptic.height != ph || panoptic.width != pw) {
      fail(ErrorCode::kShapeMismatch, "segmentation extent differs from the image");
    }
    labels = refocus::build_label_map(
        panoptic, pmask, refocus::default_negative_categories(panoptic, pmask), &diag);
    return 0;
  });

  diffusion::ContentInit init;
  enter(kStageInit);
  try {
    init = diffusion::content_initialize(padded, pmask, *clients.inpainter, *clients.vae);
  } catch (const Error& e) {
    const auto stage = e.code() == ErrorCode::kEncodeFailure ? kStageEncode : kStageInit;
    throw StageError(std::string(stage), e.code(), e.what());
  }

  diffusion::ConditioningBundle cond;
  enter(kStageEncode);
  run_stage(kStageEncode, [&] {
    Image masked = padded;
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        if (!pmask.test(y, x)) continue;
        for (int c = 0; c < 3; ++c) masked.at(y, x, c) = 0;
      }
    }
    cond.z_masked = clients.vae->encode(masked);
    cond.mask = diffusion::latent_mask(pmask);
    if (!cond.z_masked.same_shape(init.latent.z)) {
      fail(ErrorCode::kEncodeFailure, "masked latent has the wrong shape");
    }
    return 0;
  });

  std::string prompt;
  try {
    const auto tags = tuning::rank_background_tags(panoptic, pmask);
    prompt = tuning::build_simple_prompt(tags);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoBackgroundTag) throw;
    prompt = "A photo of " + std::string(tuning::kPlaceholder) + " background";
  }

  const auto sampling = diffusion::subsample(diffusion::default_schedule(), config.steps);
  const int t_prime = diffusion::steps_from_strength(sampling.steps, config.strength);
  refocus::RefocusHook hook(labels, config.refocus);

  diffusion::LatentState z;
  enter(kStageDenoise);
  run_stage(kStageDenoise, [&] {
    cond.text = clients.text_encoder->encode(prompt);
    const Eigen::MatrixXd uncond = clients.text_encoder->encode("");
    const auto& init_z = init.latent.z;
    const Latent eps = diffusion::gaussian_latent(init_z.height(), init_z.width(),
                                                  init_z.channels(), config.seed);
    const auto start = diffusion::forward_noise(init.latent, t_prime, sampling, eps);
    const double g = config.guidance;
    const auto& base = clients.denoiser;
    diffusion::NoisePredictor guided =
        [&](const Latent& x9, int ts, const Eigen::MatrixXd& text,
            diffusion::SelfAttentionHook* h, double tn) {
          Latent c = base(x9, ts, text, h, tn);
          if (g == 1.0) return c;
          const Latent u = base(x9, ts, uncond, h, tn);
          if (!u.same_shape(c)) {
            fail(ErrorCode::kDenoiserFailure, "guidance passes disagree in shape");
          }
          auto cv = c.values();
          const auto uv = u.values();
          for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = uv[i] + g * (cv[i] - uv[i]);
          return c;
        };
    z = diffusion::denoise_loop({start.z, t_prime}, cond, sampling, guided,
                                config.refocus.enabled ? &hook : nullptr);
    return 0;
  });

  Image decoded;
  enter(kStageDecode);
  run_stage(kStageDecode, [&] {
    decoded = clients.vae->decode(z.z);
    if (decoded.height() != ph || decoded.width() != pw || decoded.channels() != 3) {
      fail(ErrorCode::kDecodeFailure, "decoded extent " + decoded.shape_string());
    }
    return 0;
  });

  enter(kStageComposite);
  Image out = run_stage(kStageComposite, [&] {
    return crop(composite(padded, decoded, pmask, config.feather), image.height(),
                image.width());
  });

  if (trace != nullptr) {
    trace->prompt = prompt;
    trace->sampling_steps = sampling.steps;
    trace->start_step = t_prime;
    trace->refocus_invocations = hook.invocations();
    trace->uncovered_pixels = diag.uncovered_pixels;
    trace->preprocessed = init.preprocessed;
    trace->decoded = decoded;
  }
  return out;
}

}  // namespace erasekit::service
