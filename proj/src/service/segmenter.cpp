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

#include "erasekit/service/segmenter.hpp"

#include <limits>
#include <map>
#include <vector>

#include "erasekit/common/error.hpp"
#include "erasekit/olrd/toy_scene.hpp"

namespace erasekit::service {

Panoptic PaletteSegmenter::panoptic(const Image& image) const {
  if (image.empty() || image.channels() != 3) {
    fail(ErrorCode::kSegmenterUnavailable, "expected a non-empty RGB image");
  }
  const auto& palette = olrd::toy_palette();
  const int h = image.height();
  const int w = image.width();
  const int background = static_cast<int>(palette.size());
  std::vector<int> cls(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = std::numeric_limits<double>::infinity();
      int arg = background;
      for (std::size_t k = 0; k < palette.size(); ++k) {
        double d = 0.0;
        for (int c = 0; c < 3; ++c) {
          const double v = static_cast<double>(image.at(y, x, c)) - palette[k].rgb[c];
          d += v * v;
        }
        if (d < best) {
          best = d;
          arg = static_cast<int>(k);
        }
      }
      cls[static_cast<std::size_t>(y) * w + x] =
          best <= max_distance_ * max_distance_ ? arg : background;
    }
  }

  Panoptic out;
  out.height = h;
  out.width = w;
  int next_id = 1;
  const auto kind_of = [&](int k) {
    return k == background ? SegmentKind::kStuff : palette[k].kind;
  };
  const auto name_of = [&](int k) {
    return k == background ? std::string("background") : palette[k].category;
  };
  // Stuff: one segment per category, in palette order.
  for (int k = 0; k <= background; ++k) {
    if (kind_of(k) != SegmentKind::kStuff) continue;
    Mask m(h, w);
    for (std::size_t i = 0; i < cls.size(); ++i) m.values()[i] = cls[i] == k;
    if (m.any()) out.segments.push_back({next_id++, name_of(k), SegmentKind::kStuff, std::move(m)});
  }
  // Things: 4-connected components in scan order.
  std::vector<char> seen(cls.size(), 0);
  std::vector<int> stack;
  for (std::size_t start = 0; start < cls.size(); ++start) {
    const int k = cls[start];
    if (seen[start] || kind_of(k) != SegmentKind::kThing) continue;
    Mask m(h, w);
    stack.assign(1, static_cast<int>(start));
    seen[start] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int y = p / w;
      const int x = p % w;
      m.at(y, x) = 1;
      const int ny[] = {y - 1, y + 1, y, y};
      const int nx[] = {x, x, x - 1, x + 1};
      for (int n = 0; n < 4; ++n) {
        if (ny[n] < 0 || nx[n] < 0 || ny[n] >= h || nx[n] >= w) continue;
        const auto q = static_cast<std::size_t>(ny[n]) * w + nx[n];
        if (!seen[q] && cls[q] == k) {
          seen[q] = 1;
          stack.push_back(static_cast<int>(q));
        }
      }
    }
    out.segments.push_back({next_id++, name_of(k), SegmentKind::kThing, std::move(m)});
  }
  return out;
}

Panoptic UnavailableSegmenter::panoptic(const Image&) const {
  fail(ErrorCode::kSegmenterUnavailable, "no segmenter configured");
}

}  // namespace erasekit::service
