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

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "erasekit/common/array3.hpp"

namespace erasekit {

enum class SegmentKind { kThing, kStuff };

struct Segment {
  int id = 0;
  std::string category;
  SegmentKind kind = SegmentKind::kStuff;
  Mask mask;

  std::size_t area() const { return mask.count(); }
};

// Full-image panoptic labelling. Segment masks are expected to be disjoint
// and to cover the image; gaps are tolerated.
struct Panoptic {
  int height = 0;
  int width = 0;
  std::vector<Segment> segments;

  // Index of the segment owning pixel (y, x), or -1.
  int owner(int y, int x) const;
  // Per-pixel owner index (row-major), -1 where uncovered.
  std::vector<int> owner_map() const;
  std::size_t uncovered_pixels() const;
};

struct PanopticScene {
  Image image;
  Panoptic panoptic;
};

std::string_view to_string(SegmentKind kind);
SegmentKind segment_kind_from_string(std::string_view text);

// JSON boundary: {"height", "width", "segments": [{id, category,
// kind: "thing"|"stuff", rle_mask: {size, counts}}]}. A bare segment array
// is accepted on input; the extent is then taken from the first RLE.
nlohmann::json panoptic_to_json(const Panoptic& panoptic);
Panoptic panoptic_from_json(const nlohmann::json& j);

}  // namespace erasekit
