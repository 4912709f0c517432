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

#include "erasekit/refocus/label_map.hpp"

#include <algorithm>

namespace erasekit::refocus {

char label_char(Label label) {
  switch (label) {
    case Label::kMask: return 'm';
    case Label::kPositive: return 'p';
    case Label::kNegative: return 'n';
  }
  return '?';
}

std::set<std::string> default_negative_categories(const Panoptic& panoptic,
                                                  const Mask& erase_mask) {
  std::set<std::string> out;
  for (const auto& seg : panoptic.segments) {
    if (seg.kind == SegmentKind::kThing) {
      out.insert(seg.category);
      continue;
    }
    std::size_t area = 0, covered = 0;
    for (int y = 0; y < seg.mask.height(); ++y) {
      for (int x = 0; x < seg.mask.width(); ++x) {
        if (!seg.mask.test(y, x)) continue;
        ++area;
        covered += erase_mask.test(y, x);
      }
    }
    if (area > 0 && 2 * covered >= area) out.insert(seg.category);
  }
  return out;
}

LabelMap build_label_map(const Panoptic& panoptic, const Mask& erase_mask,
                         const std::set<std::string>& negative_categories,
                         LabelMapDiagnostics* diagnostics) {
  if (erase_mask.height() != panoptic.height ||
      erase_mask.width() != panoptic.width) {
    fail(ErrorCode::kShapeMismatch, "erase mask and panoptic extents differ");
  }
  std::vector<bool> negative(panoptic.segments.size());
  for (std::size_t i = 0; i < panoptic.segments.size(); ++i) {
    negative[i] = negative_categories.contains(panoptic.segments[i].category);
  }
  const std::vector<int> owners = panoptic.owner_map();
  LabelMap map(panoptic.height, panoptic.width);
  std::size_t uncovered = 0;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const int o = owners[static_cast<std::size_t>(y) * map.width + x];
      if (o < 0) ++uncovered;
      if (erase_mask.test(y, x)) {
        map.at(y, x) = Label::kMask;
      } else if (o >= 0 && negative[o]) {
        map.at(y, x) = Label::kNegative;
      } else {
        map.at(y, x) = Label::kPositive;
      }
    }
  }
  if (diagnostics != nullptr) diagnostics->uncovered_pixels = uncovered;
  return map;
}

LabelMap downsample_label_map(const LabelMap& map, int target_height,
                              int target_width) {
  if (target_height < 1 || target_width < 1 || target_height > map.height ||
      target_width > map.width) {
    fail(ErrorCode::kInvalidTarget,
         std::to_string(target_height) + "x" + std::to_string(target_width) +
             " from " + std::to_string(map.height) + "x" +
             std::to_string(map.width));
  }
  if (target_height == map.height && target_width == map.width) return map;
  auto rank = [](Label l) {
    return l == Label::kMask ? 2 : (l == Label::kNegative ? 1 : 0);
  };
  LabelMap out(target_height, target_width);
  for (int i = 0; i < target_height; ++i) {
    const int y0 = i * map.height / target_height;
    const int y1 = ((i + 1) * map.height + target_height - 1) / target_height;
    for (int j = 0; j < target_width; ++j) {
      const int x0 = j * map.width / target_width;
      const int x1 = ((j + 1) * map.width + target_width - 1) / target_width;
      Label best = Label::kPositive;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          if (rank(map.at(y, x)) > rank(best)) best = map.at(y, x);
        }
      }
      out.at(i, j) = best;
    }
  }
  return out;
}

}  // namespace erasekit::refocus
