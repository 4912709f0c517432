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

#include "erasekit/tuning/prompt.hpp"

#include <algorithm>
#include <map>

namespace erasekit::tuning {

std::vector<BackgroundTag> rank_background_tags(const Panoptic& panoptic,
                                                const Mask& erase_mask) {
  if (erase_mask.height() != panoptic.height ||
      erase_mask.width() != panoptic.width) {
    fail(ErrorCode::kShapeMismatch, "erase mask and panoptic extents differ");
  }
  const std::vector<int> owners = panoptic.owner_map();
  std::map<std::string, BackgroundTag> by_name;
  for (const auto& seg : panoptic.segments) {
    if (seg.kind != SegmentKind::kStuff) continue;
    auto& tag = by_name[seg.category];
    tag.name = seg.category;
    tag.area += seg.area();
  }
  const int h = panoptic.height, w = panoptic.width;
  constexpr int kDy[] = {-1, 1, 0, 0};
  constexpr int kDx[] = {0, 0, -1, 1};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!erase_mask.test(y, x)) continue;
      for (int k = 0; k < 4; ++k) {
        const int ny = y + kDy[k], nx = x + kDx[k];
        if (!erase_mask.in_bounds(ny, nx) || erase_mask.test(ny, nx)) continue;
        const int o = owners[static_cast<std::size_t>(ny) * w + nx];
        if (o < 0 || panoptic.segments[o].kind != SegmentKind::kStuff) continue;
        ++by_name[panoptic.segments[o].category].adjacency;
      }
    }
  }
  std::vector<BackgroundTag> out;
  for (auto& [name, tag] : by_name) out.push_back(std::move(tag));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.area > b.area;
  });
  return out;
}

std::string build_simple_prompt(std::span<const BackgroundTag> tags) {
  if (tags.empty()) fail(ErrorCode::kNoBackgroundTag, "no background tag");
  const BackgroundTag* best = &tags.front();
  for (const auto& tag : tags.subspan(1)) {
    if (tag.adjacency > best->adjacency ||
        (tag.adjacency == best->adjacency && tag.area > best->area)) {
      best = &tag;
    }
  }
  return "A photo of " + std::string(kPlaceholder) + " " + best->name;
}

std::string prompt_mix(const PromptPair& prompts, double u) {
  return u < 0.5 ? prompts.simple_prompt : prompts.caption_prompt;
}

}  // namespace erasekit::tuning
