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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "erasekit/common/panoptic.hpp"

namespace erasekit::olrd {

struct PaletteEntry {
  std::string category;
  SegmentKind kind;
  std::array<std::uint8_t, 3> rgb;
};

// Fixed category colors used by the synthetic corpus and the palette
// segmenter.
const std::vector<PaletteEntry>& toy_palette();

// Synthetic outdoor scene: sky above a horizon, two ground materials split
// at a random column, and one or two elliptical "thing" objects. Pixel
// colors are the palette color plus a small deterministic texture.
// `index` selects the scene; the same index always gives the same scene.
PanopticScene toy_scene(int index, int size = 64);

std::vector<PanopticScene> toy_corpus(int count, int size = 64);

}  // namespace erasekit::olrd
