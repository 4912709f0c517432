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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "erasekit/common/panoptic.hpp"

namespace erasekit::tuning {

// Placeholder string standing for the learned "background completion"
// concept.
inline constexpr std::string_view kPlaceholder = "R_*";

struct BackgroundTag {
  std::string name;
  std::size_t adjacency = 0;  // mask-boundary contacts with this category
  std::size_t area = 0;       // pixels of this category

  friend bool operator==(const BackgroundTag&, const BackgroundTag&) = default;
};

// Stuff categories of the scene with their area and the number of
// 4-neighbour contacts between erase-mask pixels and pixels of that
// category outside the mask. Sorted by area, largest first; ties by name.
std::vector<BackgroundTag> rank_background_tags(const Panoptic& panoptic,
                                                const Mask& erase_mask);

// "A photo of R_* {tag}" for the tag with the greatest adjacency; ties go
// to the larger area, then to the earlier tag. Throws kNoBackgroundTag on
// an empty list.
std::string build_simple_prompt(std::span<const BackgroundTag> tags);

struct PromptPair {
  std::string simple_prompt;
  std::string caption_prompt;
};

// simple prompt when u < 0.5, caption otherwise.
std::string prompt_mix(const PromptPair& prompts, double u);

}  // namespace erasekit::tuning
