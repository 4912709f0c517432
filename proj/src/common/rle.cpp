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

#include "erasekit/common/rle.hpp"

#include <numeric>

namespace erasekit {

Rle rle_encode(const Mask& mask) {
  Rle rle{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (auto v : mask.values()) {
    const std::uint8_t bit = v != 0 ? 1 : 0;
    if (bit != current) {
      rle.counts.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

Mask rle_decode(const Rle& rle) {
  if (rle.height < 0 || rle.width < 0) {
    fail(ErrorCode::kInvalidArgument, "negative RLE size");
  }
  const std::uint64_t total = std::accumulate(
      rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  const std::uint64_t expected =
      static_cast<std::uint64_t>(rle.height) * rle.width;
  if (total != expected) {
    fail(ErrorCode::kShapeMismatch,
         "RLE covers " + std::to_string(total) + " cells, mask has " +
             std::to_string(expected));
  }
  Mask mask(rle.height, rle.width);
  auto cells = mask.values();
  std::size_t pos = 0;
  std::uint8_t bit = 0;
  for (auto run : rle.counts) {
    for (std::uint32_t i = 0; i < run; ++i) cells[pos++] = bit;
    bit ^= 1;
  }
  return mask;
}

nlohmann::json rle_to_json(const Rle& rle) {
  return {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

Rle rle_from_json(const nlohmann::json& j) {
  try {
    Rle rle;
    rle.height = j.at("size").at(0).get<int>();
    rle.width = j.at("size").at(1).get<int>();
    rle.counts = j.at("counts").get<std::vector<std::uint32_t>>();
    return rle;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed RLE: ") + e.what());
  }
}

}  // namespace erasekit
