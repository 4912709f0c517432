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

#include "erasekit/common/panoptic.hpp"

#include "erasekit/common/rle.hpp"

namespace erasekit {

int Panoptic::owner(int y, int x) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].mask.test(y, x)) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> Panoptic::owner_map() const {
  std::vector<int> owners(static_cast<std::size_t>(height) * width, -1);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto cells = segments[i].mask.values();
    for (std::size_t p = 0; p < owners.size() && p < cells.size(); ++p) {
      if (cells[p] && owners[p] < 0) owners[p] = static_cast<int>(i);
    }
  }
  return owners;
}

std::size_t Panoptic::uncovered_pixels() const {
  std::size_t n = 0;
  for (int o : owner_map()) n += (o < 0);
  return n;
}

std::string_view to_string(SegmentKind kind) {
  return kind == SegmentKind::kThing ? "thing" : "stuff";
}

SegmentKind segment_kind_from_string(std::string_view text) {
  if (text == "thing") return SegmentKind::kThing;
  if (text == "stuff") return SegmentKind::kStuff;
  fail(ErrorCode::kInvalidArgument,
       "segment kind must be thing or stuff, got " + std::string(text));
}

nlohmann::json panoptic_to_json(const Panoptic& panoptic) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : panoptic.segments) {
    segs.push_back({{"id", s.id},
                    {"category", s.category},
                    {"kind", std::string(to_string(s.kind))},
                    {"rle_mask", rle_to_json(rle_encode(s.mask))}});
  }
  return {{"height", panoptic.height},
          {"width", panoptic.width},
          {"segments", std::move(segs)}};
}

Panoptic panoptic_from_json(const nlohmann::json& j) {
  try {
    const nlohmann::json& segs = j.is_array() ? j : j.at("segments");
    Panoptic out;
    if (j.is_object()) {
      out.height = j.at("height").get<int>();
      out.width = j.at("width").get<int>();
    }
    for (const auto& s : segs) {
      Segment seg;
      seg.id = s.at("id").get<int>();
      seg.category = s.at("category").get<std::string>();
      seg.kind = segment_kind_from_string(s.at("kind").get<std::string>());
      seg.mask = rle_decode(rle_from_json(s.at("rle_mask")));
      if (out.segments.empty() && j.is_array()) {
        out.height = seg.mask.height();
        out.width = seg.mask.width();
      }
      if (seg.mask.height() != out.height || seg.mask.width() != out.width) {
        fail(ErrorCode::kShapeMismatch,
             "segment " + std::to_string(seg.id) + " extent differs");
      }
      out.segments.push_back(std::move(seg));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument,
         std::string("malformed panoptic JSON: ") + e.what());
  }
}

}  // namespace erasekit
