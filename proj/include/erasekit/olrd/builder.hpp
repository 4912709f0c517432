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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "erasekit/common/array3.hpp"
#include "erasekit/common/panoptic.hpp"
#include "erasekit/common/rng.hpp"
#include "erasekit/tuning/prompt.hpp"

namespace erasekit::olrd {

// Vision-language captioner. Returns a non-empty caption or throws
// kVlmUnavailable.
class VlmClient {
 public:
  virtual ~VlmClient() = default;
  virtual std::string describe(const Image& image, std::string_view prompt) = 0;
};

// Returns the prompt as the caption.
class EchoVlm final : public VlmClient {
 public:
  std::string describe(const Image&, std::string_view prompt) override {
    return std::string(prompt);
  }
};

class UnavailableVlm final : public VlmClient {
 public:
  std::string describe(const Image&, std::string_view) override;
};

struct BuildConfig {
  double min_area_fraction = 0.01;
  double max_area_fraction = 0.30;
  double purity = 0.95;        // stuff fraction of the shifted footprint
  double max_self_iou = 0.25;  // shifted vs original footprint
  int max_tries = 100;
};

struct SelectedObject {
  std::size_t segment_index = 0;
  int segment_id = 0;
  std::string category;
  Mask mask;     // m
  Image pixels;  // o: image where m = 1, zero elsewhere
};

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

// Indices of thing segments whose area fraction is within the limits.
std::vector<std::size_t> eligible_objects(const PanopticScene& scene,
                                          const BuildConfig& cfg = {});

// Uniform draw over eligible objects. Throws kNoErasableObject.
SelectedObject select_object(const PanopticScene& scene, Rng& rng,
                             const BuildConfig& cfg = {});

// Mask translated by the offset; cells shifted out of range are dropped.
Mask shift_mask(const Mask& mask, Offset offset);
// Image translated by the offset, zero where nothing lands.
Image shift_image(const Image& image, Offset offset);

double mask_iou(const Mask& a, const Mask& b);

// Draws offsets that keep the footprint's bounding box inside the image
// and accepts the first one whose shifted footprint is at least
// cfg.purity on stuff pixels of the original scene and has IoU below
// cfg.max_self_iou with the original footprint. Throws kPlacementNotFound
// after cfg.max_tries rejections.
Offset find_placement(const PanopticScene& scene, const Mask& object_mask,
                      Rng& rng, const BuildConfig& cfg = {});

// shifted_object where shifted_mask is 1, original elsewhere.
Image blend(const Image& original, const Image& shifted_object,
            const Mask& shifted_mask);

// "Describe the {t1} and {t2} in the image" (or the one-tag form).
std::string caption_prompt(std::span<const std::string> tags);

// Sends the caption prompt for the first two tags to the VLM and returns
// the response verbatim. Throws kInvalidArgument on an empty tag list.
std::string background_caption(const Image& image,
                               std::span<const std::string> tags,
                               VlmClient& vlm);

struct Provenance {
  std::string source_id;
  int object_id = 0;
  std::string object_category;
  Offset offset;
  std::uint64_t seed = 0;
};

struct ErasureSample {
  std::string id;
  Image original;      // I
  Image blended;       // I~
  Mask shifted_mask;   // m~, 1 on the shifted footprint
  std::vector<tuning::BackgroundTag> tags;  // top-2 stuff tags by area
  std::string caption;
  bool caption_failed = false;
  Provenance provenance;
};

// select_object -> find_placement -> blend -> background_caption, all
// randomness drawn from `seed`. A VLM failure leaves the caption empty and
// sets caption_failed. The blend invariants are checked before returning.
ErasureSample build_sample(const PanopticScene& scene,
                           const std::string& source_id, std::uint64_t seed,
                           VlmClient& vlm, const BuildConfig& cfg = {});

// Throws kInvalidArgument if I~ differs from I off the footprint or from
// the shifted object pixels on it.
void check_blend_invariants(const ErasureSample& sample);

struct ManifestEntry {
  std::string id;
  int shard = 0;
  std::string original_sha256;
  std::string blended_sha256;
  std::string mask_sha256;
  std::string meta_sha256;
};

struct Manifest {
  int format_version = 1;
  int shard_size = 0;
  std::vector<ManifestEntry> samples;
};

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);
nlohmann::json sample_meta(const ErasureSample& sample);

// Writes {id}/original.png, blended.png, mask.png (0/255) and meta.json for
// every sample plus manifest.json at the root. Entries are grouped into
// shards of `shard_size` consecutive samples (recorded in the manifest).
// Throws kIoFailure.
Manifest write_dataset(std::span<const ErasureSample> samples,
                       const std::filesystem::path& out_dir,
                       int shard_size = 1000);

// Reads a dataset back, verifying every hash. Throws kCorruptDataset.
std::vector<ErasureSample> read_dataset(const std::filesystem::path& dir);

}  // namespace erasekit::olrd
