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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

using erasekit::Image;
using erasekit::Mask;
using erasekit::refocus::Label;

std::string labels_of(const erasekit::refocus::LabelMap& map) {
  std::string out;
  for (Label l : map.labels) {
    out += l == Label::kMask ? 'm' : l == Label::kNegative ? 'n' : 'p';
  }
  return out;
}

erasekit::refocus::LabelMap map_of(const std::string& labels, int h, int w) {
  erasekit::refocus::LabelMap map(h, w);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    map.labels[i] = labels[i] == 'm'   ? Label::kMask
                    : labels[i] == 'n' ? Label::kNegative
                                       : Label::kPositive;
  }
  return map;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> pair_masks(
    const std::string& labels) {
  static const std::set<std::string> pos{"mp", "pm", "pp"};
  static const std::set<std::string> neg{"mm", "mn", "nm"};
  const auto n = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd mp = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd mn = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::string key{labels[i], labels[j]};
      if (pos.count(key)) mp(i, j) = 1.0;
      if (neg.count(key)) mn(i, j) = 1.0;
    }
  }
  return {mp, mn};
}

std::string label_map(const erasekit::Panoptic& panoptic, const Mask& erase,
                      const std::set<std::string>& negatives) {
  std::string out;
  for (int y = 0; y < erase.height(); ++y) {
    for (int x = 0; x < erase.width(); ++x) {
      bool negative = false;
      for (const auto& seg : panoptic.segments) {
        if (seg.mask.test(y, x) && negatives.count(seg.category)) {
          negative = true;
        }
      }
      out += erase.test(y, x) ? 'm' : negative ? 'n' : 'p';
    }
  }
  return out;
}

std::string pool(const std::string& labels, int h, int w, int th, int tw) {
  std::string out;
  for (int i = 0; i < th; ++i) {
    for (int j = 0; j < tw; ++j) {
      bool has_m = false;
      bool has_n = false;
      for (int y = 0; y < h; ++y) {
        // Row y is covered when [y, y+1) meets [i*h/th, (i+1)*h/th).
        if (y * th >= (i + 1) * h || (y + 1) * th <= i * h) continue;
        for (int x = 0; x < w; ++x) {
          if (x * tw >= (j + 1) * w || (x + 1) * tw <= j * w) continue;
          const char c = labels[static_cast<std::size_t>(y) * w + x];
          has_m |= c == 'm';
          has_n |= c == 'n';
        }
      }
      out += has_m ? 'm' : has_n ? 'n' : 'p';
    }
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> weights(const Eigen::MatrixXd& s,
                                                    double lambda_pos,
                                                    double lambda_neg) {
  Eigen::MatrixXd wp(s.rows(), s.cols());
  Eigen::MatrixXd wn(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    double hi = s(i, 0);
    double lo = s(i, 0);
    for (Eigen::Index j = 1; j < s.cols(); ++j) {
      hi = std::max(hi, s(i, j));
      lo = std::min(lo, s(i, j));
    }
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      wp(i, j) = (1.0 - lambda_pos) * lo + lambda_pos * hi;
      wn(i, j) = lambda_neg * hi;
    }
  }
  return {wp, wn};
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      total += std::exp(logits(i, j));
    }
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j)) / total;
    }
  }
  return out;
}

namespace {

double luma_at(const Image& im, int y, int x) {
  return 0.299 * im.at(y, x, 0) + 0.587 * im.at(y, x, 1) +
         0.114 * im.at(y, x, 2);
}

}  // namespace

double windowed_ssim(const Image& a, const Image& b) {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  double g[kSize][kSize];
  double gsum = 0.0;
  for (int u = 0; u < kSize; ++u) {
    for (int v = 0; v < kSize; ++v) {
      const double du = u - 5;
      const double dv = v - 5;
      g[u][v] = std::exp(-(du * du + dv * dv) / (2 * kSigma * kSigma));
      gsum += g[u][v];
    }
  }
  double total = 0.0;
  int count = 0;
  for (int y = 0; y + kSize <= a.height(); ++y) {
    for (int x = 0; x + kSize <= a.width(); ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int u = 0; u < kSize; ++u) {
        for (int v = 0; v < kSize; ++v) {
          const double w = g[u][v] / gsum;
          const double pa = luma_at(a, y + u, x + v);
          const double pb = luma_at(b, y + u, x + v);
          ma += w * pa;
          mb += w * pb;
          saa += w * pa * pa;
          sbb += w * pb * pb;
          sab += w * pa * pb;
        }
      }
      const double va = saa - ma * ma;
      const double vb = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

namespace {

bool on_stuff(const erasekit::PanopticScene& scene, int y, int x) {
  for (const auto& seg : scene.panoptic.segments) {
    if (seg.mask.test(y, x)) return seg.kind == erasekit::SegmentKind::kStuff;
  }
  return false;
}

}  // namespace

std::vector<erasekit::olrd::Offset> feasible_offsets(
    const erasekit::PanopticScene& scene, const Mask& object, double purity,
    double max_iou) {
  const int h = object.height();
  const int w = object.width();
  std::vector<erasekit::olrd::Offset> out;
  for (int dy = -h; dy <= h; ++dy) {
    for (int dx = -w; dx <= w; ++dx) {
      bool inside = true;
      std::size_t area = 0, stuff = 0, overlap = 0;
      for (int y = 0; y < h && inside; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!object.test(y, x)) continue;
          const int ny = y + dy;
          const int nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= h || nx >= w) {
            inside = false;
            break;
          }
          ++area;
          stuff += on_stuff(scene, ny, nx);
          overlap += object.test(ny, nx);
        }
      }
      if (!inside || area == 0) continue;
      const double iou =
          static_cast<double>(overlap) / static_cast<double>(2 * area - overlap);
      if (static_cast<double>(stuff) >= purity * static_cast<double>(area) &&
          iou < max_iou) {
        out.push_back({dx, dy});
      }
    }
  }
  return out;
}

std::string validate_sample(const erasekit::olrd::ErasureSample& s,
                            const erasekit::PanopticScene& scene,
                            double purity) {
  const Image& I = s.original;
  const Image& J = s.blended;
  const Mask& m = s.shifted_mask;
  if (!(I == scene.image)) return "original differs from the source scene";
  if (!J.same_shape(I) || m.height() != I.height() || m.width() != I.width()) {
    return "dimension mismatch";
  }
  if (!m.is_binary() || !m.any()) return "mask not binary or empty";
  const erasekit::Segment* object = nullptr;
  for (const auto& seg : scene.panoptic.segments) {
    if (seg.id == s.provenance.object_id) object = &seg;
  }
  if (object == nullptr || object->kind != erasekit::SegmentKind::kThing) {
    return "provenance object is not a thing segment";
  }
  const int dx = s.provenance.offset.dx;
  const int dy = s.provenance.offset.dy;
  std::size_t area = 0;
  std::size_t stuff = 0;
  for (int y = 0; y < I.height(); ++y) {
    for (int x = 0; x < I.width(); ++x) {
      const int sy = y - dy;
      const int sx = x - dx;
      const bool from_object = sy >= 0 && sx >= 0 && sy < I.height() &&
                               sx < I.width() && object->mask.test(sy, sx);
      if (from_object != m.test(y, x)) return "mask is not the shifted object";
      for (int c = 0; c < 3; ++c) {
        if (!m.test(y, x)) {
          if (J.at(y, x, c) != I.at(y, x, c)) return "identity region altered";
        } else if (J.at(y, x, c) != I.at(sy, sx, c)) {
          return "footprint is not the shifted object";
        }
      }
      if (m.test(y, x)) {
        ++area;
        stuff += on_stuff(scene, y, x);
      }
    }
  }
  if (area != object->mask.count()) return "footprint clipped";
  if (static_cast<double>(stuff) < purity * static_cast<double>(area)) {
    return "footprint purity below threshold";
  }
  return {};
}

bool outside_band(const Mask& mask, int y, int x, int feather) {
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) {
      if (!mask.test(v, u)) continue;
      const double dy = v - y;
      const double dx = u - x;
      if (dy * dy + dx * dx <= static_cast<double>(feather) * feather) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace oracle
