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

#include "erasekit/olrd/toy_scene.hpp"

#include <algorithm>
#include <cmath>

#include "erasekit/common/error.hpp"
#include "erasekit/common/rng.hpp"

namespace erasekit::olrd {
namespace {

const PaletteEntry& entry(const std::string& category) {
  for (const auto& e : toy_palette()) {
    if (e.category == category) return e;
  }
  fail(ErrorCode::kInvalidArgument, "unknown palette category " + category);
}

std::uint8_t textured(std::uint8_t base, int x, int y, int index, int c) {
  std::uint32_t h = static_cast<std::uint32_t>(x) * 73856093u ^
                    static_cast<std::uint32_t>(y) * 19349663u ^
                    static_cast<std::uint32_t>(index) * 83492791u ^
                    static_cast<std::uint32_t>(c) * 2654435761u;
  h ^= h >> 13;
  h *= 0x5bd1e995u;
  h ^= h >> 15;
  const int v = static_cast<int>(base) + static_cast<int>(h % 13) - 6;
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

}  // namespace

const std::vector<PaletteEntry>& toy_palette() {
  static const std::vector<PaletteEntry> palette{
      {"sky", SegmentKind::kStuff, {135, 190, 235}},
      {"grass", SegmentKind::kStuff, {70, 150, 60}},
      {"gravel", SegmentKind::kStuff, {150, 140, 130}},
      {"sand", SegmentKind::kStuff, {220, 200, 150}},
      {"water", SegmentKind::kStuff, {40, 90, 170}},
      {"sheep", SegmentKind::kThing, {245, 245, 240}},
      {"person", SegmentKind::kThing, {200, 60, 60}},
      {"car", SegmentKind::kThing, {40, 40, 40}},
      {"dog", SegmentKind::kThing, {160, 100, 40}},
  };
  return palette;
}

PanopticScene toy_scene(int index, int size) {
  if (size < 32) fail(ErrorCode::kInvalidArgument, "toy scenes need size >= 32");
  Rng rng({0x70EULL, static_cast<std::uint64_t>(index)});
  static const char* grounds[][2] = {
      {"grass", "gravel"}, {"sand", "water"}, {"grass", "sand"}, {"gravel", "water"}};
  static const char* things[] = {"sheep", "person", "car", "dog"};

  const int horizon = static_cast<int>(rng.integer(size / 4, size * 7 / 16));
  const int split = static_cast<int>(rng.integer(size / 3, size * 2 / 3));
  const auto& ground = grounds[rng.index(4)];

  // Category per pixel, later split into segments.
  std::vector<std::string> label(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      label[static_cast<std::size_t>(y) * size + x] =
          y < horizon ? "sky" : (x < split ? ground[0] : ground[1]);
    }
  }

  const int objects = 1 + static_cast<int>(rng.index(2));
  std::vector<std::pair<std::string, Mask>> thing_masks;
  for (int k = 0; k < objects; ++k) {
    const std::string category = things[rng.index(4)];
    const double ry = static_cast<double>(rng.integer(size / 16 + 1, size / 8 + 1));
    const double rx = static_cast<double>(rng.integer(size / 16 + 1, size / 8 + 1));
    const double cy = static_cast<double>(
        rng.integer(horizon + static_cast<int>(ry), size - 1 - static_cast<int>(ry)));
    const double cx = static_cast<double>(
        rng.integer(static_cast<int>(rx), size - 1 - static_cast<int>(rx)));
    Mask m(size, size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double u = (y - cy) / ry;
        const double v = (x - cx) / rx;
        auto& owner = label[static_cast<std::size_t>(y) * size + x];
        if (u * u + v * v <= 1.0 && entry(owner).kind == SegmentKind::kStuff) {
          m.at(y, x) = 1;
          owner = category;
        }
      }
    }
    if (m.any()) thing_masks.emplace_back(category, std::move(m));
  }

  PanopticScene scene;
  scene.image = Image(size, size, 3);
  scene.panoptic.height = size;
  scene.panoptic.width = size;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const auto& rgb = entry(label[static_cast<std::size_t>(y) * size + x]).rgb;
      for (int c = 0; c < 3; ++c) {
        scene.image.at(y, x, c) = textured(rgb[c], x, y, index, c);
      }
    }
  }
  int next_id = 1;
  for (const auto& e : toy_palette()) {
    if (e.kind != SegmentKind::kStuff) continue;
    Mask m(size, size);
    for (std::size_t i = 0; i < label.size(); ++i) {
      m.values()[i] = label[i] == e.category ? 1 : 0;
    }
    if (m.any()) {
      scene.panoptic.segments.push_back({next_id++, e.category, e.kind, std::move(m)});
    }
  }
  for (auto& [category, m] : thing_masks) {
    scene.panoptic.segments.push_back(
        {next_id++, category, SegmentKind::kThing, std::move(m)});
  }
  return scene;
}

std::vector<PanopticScene> toy_corpus(int count, int size) {
  std::vector<PanopticScene> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out.push_back(toy_scene(i, size));
  return out;
}

}  // namespace erasekit::olrd
