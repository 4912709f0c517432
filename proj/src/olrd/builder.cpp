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

#include "erasekit/olrd/builder.hpp"

#include <algorithm>
#include <cstdio>

#include "erasekit/common/codec.hpp"
#include "erasekit/common/error.hpp"

namespace erasekit::olrd {

using nlohmann::json;

std::string UnavailableVlm::describe(const Image&, std::string_view) {
  fail(ErrorCode::kVlmUnavailable, "no captioner configured");
}

std::vector<std::size_t> eligible_objects(const PanopticScene& scene,
                                          const BuildConfig& cfg) {
  const double total = static_cast<double>(scene.panoptic.height) *
                       static_cast<double>(scene.panoptic.width);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scene.panoptic.segments.size(); ++i) {
    const auto& s = scene.panoptic.segments[i];
    if (s.kind != SegmentKind::kThing || total <= 0) continue;
    const double f = static_cast<double>(s.area()) / total;
    if (f >= cfg.min_area_fraction && f <= cfg.max_area_fraction) {
      out.push_back(i);
    }
  }
  return out;
}

SelectedObject select_object(const PanopticScene& scene, Rng& rng,
                             const BuildConfig& cfg) {
  const auto candidates = eligible_objects(scene, cfg);
  if (candidates.empty()) {
    fail(ErrorCode::kNoErasableObject, "no thing segment within the area limits");
  }
  const std::size_t pick = candidates[rng.index(candidates.size())];
  const Segment& seg = scene.panoptic.segments[pick];
  SelectedObject out{pick, seg.id, seg.category, seg.mask,
                     Image(scene.image.height(), scene.image.width(), 3)};
  for (int y = 0; y < seg.mask.height(); ++y) {
    for (int x = 0; x < seg.mask.width(); ++x) {
      if (!seg.mask.test(y, x)) continue;
      for (int c = 0; c < 3; ++c) out.pixels.at(y, x, c) = scene.image.at(y, x, c);
    }
  }
  return out;
}

Mask shift_mask(const Mask& mask, Offset offset) {
  Mask out(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.test(y, x) && out.in_bounds(y + offset.dy, x + offset.dx)) {
        out.at(y + offset.dy, x + offset.dx) = 1;
      }
    }
  }
  return out;
}

Image shift_image(const Image& image, Offset offset) {
  Image out(image.height(), image.width(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    const int ty = y + offset.dy;
    if (ty < 0 || ty >= image.height()) continue;
    for (int x = 0; x < image.width(); ++x) {
      const int tx = x + offset.dx;
      if (tx < 0 || tx >= image.width()) continue;
      for (int c = 0; c < image.channels(); ++c) {
        out.at(ty, tx, c) = image.at(y, x, c);
      }
    }
  }
  return out;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorCode::kShapeMismatch, "IoU of masks with different extents");
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    inter += (va[i] && vb[i]);
    uni += (va[i] || vb[i]);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Offset find_placement(const PanopticScene& scene, const Mask& object_mask,
                      Rng& rng, const BuildConfig& cfg) {
  const int h = object_mask.height();
  const int w = object_mask.width();
  if (h != scene.panoptic.height || w != scene.panoptic.width) {
    fail(ErrorCode::kShapeMismatch, "object mask does not match the scene");
  }
  int y0 = h, y1 = -1, x0 = w, x1 = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!object_mask.test(y, x)) continue;
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
  }
  if (y1 < 0) fail(ErrorCode::kInvalidArgument, "object mask is empty");

  const auto owners = scene.panoptic.owner_map();
  const auto& segs = scene.panoptic.segments;
  const double area = static_cast<double>(object_mask.count());
  for (int attempt = 0; attempt < cfg.max_tries; ++attempt) {
    const Offset off{static_cast<int>(rng.integer(-x0, w - 1 - x1)),
                     static_cast<int>(rng.integer(-y0, h - 1 - y1))};
    const Mask shifted = shift_mask(object_mask, off);
    std::size_t on_stuff = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!shifted.test(y, x)) continue;
        const int o = owners[static_cast<std::size_t>(y) * w + x];
        on_stuff += (o >= 0 && segs[static_cast<std::size_t>(o)].kind == SegmentKind::kStuff);
      }
    }
    if (static_cast<double>(on_stuff) < cfg.purity * area) continue;
    if (mask_iou(shifted, object_mask) >= cfg.max_self_iou) continue;
    return off;
  }
  fail(ErrorCode::kPlacementNotFound,
       "no background placement after " + std::to_string(cfg.max_tries) +
           " tries");
}

Image blend(const Image& original, const Image& shifted_object,
            const Mask& shifted_mask) {
  if (!original.same_shape(shifted_object) ||
      shifted_mask.height() != original.height() ||
      shifted_mask.width() != original.width()) {
    fail(ErrorCode::kShapeMismatch, "blend inputs disagree in extent");
  }
  Image out = original;
  for (int y = 0; y < original.height(); ++y) {
    for (int x = 0; x < original.width(); ++x) {
      if (!shifted_mask.test(y, x)) continue;
      for (int c = 0; c < original.channels(); ++c) {
        out.at(y, x, c) = shifted_object.at(y, x, c);
      }
    }
  }
  return out;
}

std::string caption_prompt(std::span<const std::string> tags) {
  if (tags.empty()) fail(ErrorCode::kInvalidArgument, "no background tags");
  if (tags.size() == 1) return "Describe the " + tags[0] + " in the image";
  return "Describe the " + tags[0] + " and " + tags[1] + " in the image";
}

std::string background_caption(const Image& image,
                               std::span<const std::string> tags,
                               VlmClient& vlm) {
  const std::string prompt = caption_prompt(tags);
  std::string caption;
  try {
    caption = vlm.describe(image, prompt);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kVlmUnavailable) throw;
    fail(ErrorCode::kVlmUnavailable, e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::kVlmUnavailable, e.what());
  }
  if (caption.empty()) fail(ErrorCode::kVlmUnavailable, "empty caption");
  return caption;
}

void check_blend_invariants(const ErasureSample& s) {
  const Image& I = s.original;
  const Image& B = s.blended;
  if (!I.same_shape(B) || s.shifted_mask.height() != I.height() ||
      s.shifted_mask.width() != I.width()) {
    fail(ErrorCode::kInvalidArgument, "sample " + s.id + ": extents disagree");
  }
  const Offset off = s.provenance.offset;
  for (int y = 0; y < I.height(); ++y) {
    for (int x = 0; x < I.width(); ++x) {
      for (int c = 0; c < I.channels(); ++c) {
        const auto expected = s.shifted_mask.test(y, x)
                                  ? I.at(y - off.dy, x - off.dx, c)
                                  : I.at(y, x, c);
        if (B.at(y, x, c) != expected) {
          fail(ErrorCode::kInvalidArgument,
               "sample " + s.id + ": blend invariant broken at (" +
                   std::to_string(y) + "," + std::to_string(x) + ")");
        }
      }
    }
  }
}

ErasureSample build_sample(const PanopticScene& scene,
                           const std::string& source_id, std::uint64_t seed,
                           VlmClient& vlm, const BuildConfig& cfg) {
  if (scene.image.height() != scene.panoptic.height ||
      scene.image.width() != scene.panoptic.width ||
      scene.image.channels() != 3) {
    fail(ErrorCode::kShapeMismatch, "scene image and panoptic disagree");
  }
  Rng rng(seed);
  const SelectedObject obj = select_object(scene, rng, cfg);
  const Offset off = find_placement(scene, obj.mask, rng, cfg);

  ErasureSample s;
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "-%016llx",
                static_cast<unsigned long long>(seed));
  s.id = source_id + suffix;
  s.original = scene.image;
  s.shifted_mask = shift_mask(obj.mask, off);
  s.blended = blend(scene.image, shift_image(obj.pixels, off), s.shifted_mask);
  s.provenance = {source_id, obj.segment_id, obj.category, off, seed};

  auto tags = tuning::rank_background_tags(scene.panoptic, s.shifted_mask);
  if (tags.size() > 2) tags.resize(2);
  s.tags = tags;
  std::vector<std::string> names;
  for (const auto& t : tags) names.push_back(t.name);
  try {
    s.caption = background_caption(scene.image, names, vlm);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kVlmUnavailable) throw;
    s.caption.clear();
    s.caption_failed = true;
  }
  check_blend_invariants(s);
  return s;
}

json sample_meta(const ErasureSample& s) {
  json tags = json::array();
  for (const auto& t : s.tags) {
    tags.push_back({{"name", t.name}, {"adjacency", t.adjacency}, {"area", t.area}});
  }
  return {{"id", s.id},
          {"tags", tags},
          {"caption", s.caption},
          {"caption_failed", s.caption_failed},
          {"offset", {{"dx", s.provenance.offset.dx}, {"dy", s.provenance.offset.dy}}},
          {"seed", s.provenance.seed},
          {"source", s.provenance.source_id},
          {"object_id", s.provenance.object_id},
          {"object_category", s.provenance.object_category}};
}

json manifest_to_json(const Manifest& m) {
  json samples = json::array();
  for (const auto& e : m.samples) {
    samples.push_back({{"id", e.id},
                       {"shard", e.shard},
                       {"hashes",
                        {{"original", e.original_sha256},
                         {"blended", e.blended_sha256},
                         {"mask", e.mask_sha256},
                         {"meta", e.meta_sha256}}}});
  }
  return {{"format_version", m.format_version},
          {"shard_size", m.shard_size},
          {"count", m.samples.size()},
          {"samples", samples}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    m.shard_size = j.at("shard_size").get<int>();
    for (const auto& e : j.at("samples")) {
      const auto& h = e.at("hashes");
      m.samples.push_back({e.at("id").get<std::string>(), e.at("shard").get<int>(),
                           h.at("original").get<std::string>(),
                           h.at("blended").get<std::string>(),
                           h.at("mask").get<std::string>(),
                           h.at("meta").get<std::string>()});
    }
    if (j.at("count").get<std::size_t>() != m.samples.size()) {
      fail(ErrorCode::kCorruptDataset, "manifest count disagrees with entries");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptDataset, std::string("malformed manifest: ") + e.what());
  }
  if (m.format_version != 1) {
    fail(ErrorCode::kCorruptDataset,
         "unsupported dataset version " + std::to_string(m.format_version));
  }
  return m;
}

Manifest write_dataset(std::span<const ErasureSample> samples,
                       const std::filesystem::path& out_dir, int shard_size) {
  if (shard_size < 1) fail(ErrorCode::kInvalidArgument, "shard_size must be >= 1");
  Manifest manifest;
  manifest.shard_size = shard_size;
  try {
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const ErasureSample& s = samples[i];
      const auto dir = out_dir / s.id;
      std::filesystem::create_directories(dir);
      const auto original = encode_png(s.original);
      const auto blended = encode_png(s.blended);
      const auto mask = encode_png(s.shifted_mask);
      write_file(dir / "original.png", original);
      write_file(dir / "blended.png", blended);
      write_file(dir / "mask.png", mask);
      ManifestEntry e{s.id, static_cast<int>(i) / shard_size,
                      sha256_hex(original), sha256_hex(blended),
                      sha256_hex(mask), ""};
      json meta = sample_meta(s);
      meta["hashes"] = {{"original", e.original_sha256},
                        {"blended", e.blended_sha256},
                        {"mask", e.mask_sha256}};
      const std::string text = meta.dump(2);
      write_text(dir / "meta.json", text);
      e.meta_sha256 = sha256_hex(text);
      manifest.samples.push_back(std::move(e));
    }
    write_text(out_dir / "manifest.json", manifest_to_json(manifest).dump(2));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoFailure) throw;
    fail(ErrorCode::kIoFailure, e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::kIoFailure, e.what());
  }
  return manifest;
}

std::vector<ErasureSample> read_dataset(const std::filesystem::path& dir) {
  std::vector<ErasureSample> out;
  try {
    const auto mbytes = read_file(dir / "manifest.json");
    const auto manifest = manifest_from_json(json::parse(mbytes.begin(), mbytes.end()));
    for (const auto& e : manifest.samples) {
      const auto sdir = dir / e.id;
      const auto load = [&](const char* name, const std::string& expected) {
        auto bytes = read_file(sdir / name);
        if (sha256_hex(bytes) != expected) {
          fail(ErrorCode::kCorruptDataset, e.id + "/" + name + ": hash mismatch");
        }
        return bytes;
      };
      ErasureSample s;
      s.id = e.id;
      s.original = decode_png_rgb(load("original.png", e.original_sha256));
      s.blended = decode_png_rgb(load("blended.png", e.blended_sha256));
      s.shifted_mask = decode_png_mask(load("mask.png", e.mask_sha256));
      const auto mb = load("meta.json", e.meta_sha256);
      const json meta = json::parse(mb.begin(), mb.end());
      for (const auto& t : meta.at("tags")) {
        s.tags.push_back({t.at("name").get<std::string>(),
                          t.at("adjacency").get<std::size_t>(),
                          t.at("area").get<std::size_t>()});
      }
      s.caption = meta.at("caption").get<std::string>();
      s.caption_failed = meta.value("caption_failed", false);
      s.provenance = {meta.at("source").get<std::string>(),
                      meta.at("object_id").get<int>(),
                      meta.value("object_category", std::string()),
                      {meta.at("offset").at("dx").get<int>(),
                       meta.at("offset").at("dy").get<int>()},
                      meta.at("seed").get<std::uint64_t>()};
      out.push_back(std::move(s));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptDataset) throw;
    fail(ErrorCode::kCorruptDataset, e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::kCorruptDataset, e.what());
  }
  return out;
}

}  // namespace erasekit::olrd
