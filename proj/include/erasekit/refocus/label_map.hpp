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
#include <set>
#include <string>
#include <vector>

#include "erasekit/common/panoptic.hpp"

namespace erasekit::refocus {

enum class Label : std::uint8_t { kMask, kPositive, kNegative };

// One label per token of an attention grid, flattened row-major.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<Label> labels;

  LabelMap() = default;
  LabelMap(int h, int w, Label fill = Label::kPositive)
      : height(h), width(w), labels(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t size() const noexcept { return labels.size(); }
  Label at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  Label& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

char label_char(Label label);

struct LabelMapDiagnostics {
  std::size_t uncovered_pixels = 0;  // CoverageGap pixels, labelled positive
};

// Categories treated as negative when none are given: every "thing"
// category, plus the category of any segment at least half covered by the
// erase mask.
std::set<std::string> default_negative_categories(const Panoptic& panoptic,
                                                  const Mask& erase_mask);

// MASK under the erase mask, else NEGATIVE for pixels whose segment
// category is negative, else POSITIVE. Uncovered pixels become POSITIVE and
// are counted in `diagnostics`.
LabelMap build_label_map(const Panoptic& panoptic, const Mask& erase_mask,
                         const std::set<std::string>& negative_categories,
                         LabelMapDiagnostics* diagnostics = nullptr);

// Priority pooling (MASK > NEGATIVE > POSITIVE) onto a coarser grid. Target
// cell (i, j) covers source rows [floor(i*H/th), ceil((i+1)*H/th)) and the
// analogous columns. Throws kInvalidTarget if the target is larger.
LabelMap downsample_label_map(const LabelMap& map, int target_height,
                              int target_width);

}  // namespace erasekit::refocus
