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

#include <doctest.h>

#include <cmath>

#include "erasekit/common/rng.hpp"
#include "erasekit/refocus/label_map.hpp"
#include "erasekit/refocus/modulation.hpp"
#include "oracles.hpp"

using namespace erasekit;
using namespace erasekit::refocus;

namespace {

Segment segment(int id, std::string category, SegmentKind kind, int h, int w,
                int y0, int y1, int x0, int x1) {
  Segment s{id, std::move(category), kind, Mask(h, w)};
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) s.mask.at(y, x) = 1;
  }
  return s;
}

std::string random_labels(std::size_t n, Rng& rng) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += "mpn"[rng.index(3)];
  return out;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-3, 3);
  return m;
}

}  // namespace

TEST_CASE("label map: erased person, second person, grass") {
  // 4x6 scene: grass everywhere, person A at columns 0-1, person B at 4-5.
  Panoptic p{4, 6, {}};
  p.segments.push_back(segment(1, "grass", SegmentKind::kStuff, 4, 6, 0, 4, 2, 4));
  p.segments.push_back(segment(2, "person", SegmentKind::kThing, 4, 6, 0, 4, 0, 2));
  p.segments.push_back(segment(3, "person", SegmentKind::kThing, 4, 6, 0, 4, 4, 6));
  const Mask erase = p.segments[1].mask;
  const auto neg = default_negative_categories(p, erase);
  CHECK(neg.count("person"));
  CHECK_FALSE(neg.count("grass"));
  const LabelMap lm = build_label_map(p, erase, neg);
  CHECK(lm.at(0, 0) == Label::kMask);
  CHECK(lm.at(2, 3) == Label::kPositive);
  CHECK(lm.at(3, 5) == Label::kNegative);
  CHECK(oracle::labels_of(lm) == oracle::label_map(p, erase, neg));
}

TEST_CASE("label map: empty erase mask has no MASK cells") {
  Panoptic p{3, 3, {segment(1, "sky", SegmentKind::kStuff, 3, 3, 0, 3, 0, 3)}};
  const LabelMap lm = build_label_map(p, Mask(3, 3), {"sheep"});
  CHECK(oracle::labels_of(lm).find('m') == std::string::npos);
}

TEST_CASE("label map: 4x4 thing overlapping the erase mask") {
  Panoptic p{4, 4, {}};
  p.segments.push_back(segment(1, "grass", SegmentKind::kStuff, 4, 4, 0, 4, 0, 4));
  p.segments.push_back(segment(2, "dog", SegmentKind::kThing, 4, 4, 1, 3, 1, 4));
  for (int y = 1; y < 3; ++y) {
    for (int x = 1; x < 4; ++x) p.segments[0].mask.at(y, x) = 0;
  }
  Mask erase(4, 4);
  erase.at(1, 1) = erase.at(2, 1) = erase.at(2, 0) = 1;
  const auto neg = default_negative_categories(p, erase);
  CHECK(oracle::labels_of(build_label_map(p, erase, neg)) ==
        oracle::label_map(p, erase, neg));
}

TEST_CASE("label map: coverage gaps fall back to positive") {
  Panoptic p{2, 2, {segment(1, "dog", SegmentKind::kThing, 2, 2, 0, 1, 0, 2)}};
  LabelMapDiagnostics diag;
  const LabelMap lm = build_label_map(p, Mask(2, 2), {"dog"}, &diag);
  CHECK(diag.uncovered_pixels == 2);
  CHECK(oracle::labels_of(lm) == "nnpp");
}

TEST_CASE("downsample: identity, priority and oracle") {
  Rng rng(21);
  const std::string labels = random_labels(64, rng);
  const LabelMap src = oracle::map_of(labels, 8, 8);
  CHECK(downsample_label_map(src, 8, 8) == src);
  CHECK(oracle::labels_of(downsample_label_map(oracle::map_of("pppm", 2, 2), 1, 1)) == "m");
  CHECK(oracle::labels_of(downsample_label_map(oracle::map_of("pnpp", 2, 2), 1, 1)) == "n");
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 1 + static_cast<int>(rng.index(9));
    const int w = 1 + static_cast<int>(rng.index(9));
    const int th = 1 + static_cast<int>(rng.index(h));
    const int tw = 1 + static_cast<int>(rng.index(w));
    const std::string l = random_labels(h * w, rng);
    CHECK(oracle::labels_of(downsample_label_map(oracle::map_of(l, h, w), th, tw)) ==
          oracle::pool(l, h, w, th, tw));
  }
  CHECK_THROWS_AS(downsample_label_map(src, 9, 8), Error);
}

TEST_CASE("pair masks: all-positive map") {
  const auto pm = build_pair_masks(oracle::map_of("pppp", 2, 2));
  CHECK(pm.pos.isApprox(Eigen::MatrixXd::Ones(4, 4)));
  CHECK(pm.neg.isZero(0));
}

TEST_CASE("pair masks: (m, n) example") {
  const auto pm = build_pair_masks(oracle::map_of("mn", 1, 2));
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 1, 1, 0;
  CHECK(pm.neg == expected);
  CHECK(pm.pos.isZero(0));
}

TEST_CASE("pair masks match the case tables and stay disjoint") {
  Rng rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = 1 + static_cast<int>(rng.index(6));
    const int w = 1 + static_cast<int>(rng.index(6));
    const std::string l = random_labels(h * w, rng);
    const auto pm = build_pair_masks(oracle::map_of(l, h, w));
    const auto [pos, neg] = oracle::pair_masks(l);
    CHECK(pm.pos == pos);
    CHECK(pm.neg == neg);
    CHECK(pm.pos.cwiseProduct(pm.neg).isZero(0));
  }
}

TEST_CASE("modulation weights") {
  RefocusConfig cfg;
  Eigen::MatrixXd row(1, 3);
  row << 1, 3, 2;
  const auto w = modulation_weights(row, cfg);
  for (int j = 0; j < 3; ++j) {
    CHECK(w.pos(0, j) == doctest::Approx(2.6).epsilon(1e-12));
    CHECK(w.neg(0, j) == doctest::Approx(3.0).epsilon(1e-12));
  }

  const auto c = modulation_weights(Eigen::MatrixXd::Constant(3, 3, 1.7), cfg);
  CHECK(c.pos.isApprox(Eigen::MatrixXd::Constant(3, 3, 1.7)));
  CHECK(c.neg.isApprox(Eigen::MatrixXd::Constant(3, 3, 1.7 * cfg.lambda_neg)));

  Rng rng(4);
  const Eigen::MatrixXd s = random_matrix(5, 5, rng);
  RefocusConfig top = cfg;
  top.lambda_pos = 1.0;
  const auto t = modulation_weights(s, top);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(t.pos(i, 2) == s.row(i).maxCoeff());

  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd r = random_matrix(6, 6, rng);
    const auto a = modulation_weights(r, cfg);
    const auto [wp, wn] = oracle::weights(r, cfg.lambda_pos, cfg.lambda_neg);
    CHECK((a.pos - wp).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.neg - wn).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("make_modulation combines masks and weights") {
  Rng rng(12);
  const std::string l = "mpnpmp";
  const Eigen::MatrixXd s = random_matrix(6, 6, rng);
  const auto mod = make_modulation(build_pair_masks(oracle::map_of(l, 2, 3)),
                                   modulation_weights(s, {}));
  const auto [pos, neg] = oracle::pair_masks(l);
  const auto [wp, wn] = oracle::weights(s, 0.8, 1.0);
  CHECK((mod.m - (wp.cwiseProduct(pos) - wn.cwiseProduct(neg))).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("refocused attention examples") {
  Eigen::MatrixXd q(2, 1), k(2, 1);
  q << 0, 0;
  k << 0, 0;
  Eigen::MatrixXd m(2, 2);
  m << 1, -1, 1, -1;
  const auto a = refocused_attention(q, k, m, 1);
  CHECK(a(0, 0) == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(a(0, 1) == doctest::Approx(0.1192).epsilon(1e-3));

  Eigen::MatrixXd q1(1, 3), k1(1, 3);
  q1 << 5, -1, 2;
  k1 << 0.3, 9, 1;
  CHECK(refocused_attention(q1, k1, Eigen::MatrixXd::Constant(1, 1, 4.0), 3)(0, 0) == 1.0);

  Rng rng(5);
  const Eigen::MatrixXd qq = random_matrix(7, 4, rng);
  const Eigen::MatrixXd kk = random_matrix(7, 4, rng);
  const auto plain = refocused_attention(qq, kk, Eigen::MatrixXd::Zero(7, 7), 4);
  CHECK((plain - oracle::softmax_rows(qq * kk.transpose() / 2.0)).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd big = random_matrix(7, 7, rng) * 50.0;
  const auto mod = refocused_attention(qq, kk, big, 4);
  for (Eigen::Index i = 0; i < 7; ++i) CHECK(std::abs(mod.row(i).sum() - 1.0) < 1e-6);
  CHECK((mod - oracle::softmax_rows((qq * kk.transpose() + big) / 2.0)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(refocused_attention(qq, random_matrix(7, 3, rng), big, 4), Error);
}

TEST_CASE("directional refocus on mask-query rows") {
  Rng rng(77);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::string l = random_labels(9, rng);
    const int d = 4;
    const Eigen::MatrixXd q = random_matrix(9, d, rng);
    const Eigen::MatrixXd k = random_matrix(9, d, rng);
    const Eigen::MatrixXd s = q * k.transpose();
    const auto mod = make_modulation(build_pair_masks(oracle::map_of(l, 3, 3)),
                                     modulation_weights(s, {}));
    const auto a = refocused_attention(q, k, Eigen::MatrixXd::Zero(9, 9), d);
    const auto b = refocused_attention(q, k, mod, d);
    for (int i = 0; i < 9; ++i) {
      if (l[i] != 'm') continue;
      const bool has_p = l.find('p') != std::string::npos;
      const bool has_other = l.find_first_of("mn") != std::string::npos;
      if (!has_p || !has_other) continue;
      if (0.2 * s.row(i).minCoeff() + 1.8 * s.row(i).maxCoeff() <= 0) continue;
      double pa = 0, pb = 0;
      for (int j = 0; j < 9; ++j) {
        if (l[j] == 'p') {
          pa += a(i, j);
          pb += b(i, j);
        }
      }
      CHECK(pb / (1 - pb) > pa / (1 - pa));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("shift covariance of the modulation weights") {
  Rng rng(8);
  const std::string l = "mpnpmppnm";
  const auto masks = build_pair_masks(oracle::map_of(l, 3, 3));
  const Eigen::MatrixXd q = random_matrix(9, 3, rng);
  const Eigen::MatrixXd k = random_matrix(9, 3, rng);
  const Eigen::MatrixXd s = q * k.transpose();
  const double c = 2.75;
  const Eigen::MatrixXd shifted = s.array() + c;
  const auto w0 = modulation_weights(s, {});
  const auto w1 = modulation_weights(shifted, {});
  CHECK(((w1.pos - w0.pos).array() - c).abs().maxCoeff() < 1e-12);
  CHECK(((w1.neg - w0.neg).array() - c).abs().maxCoeff() < 1e-12);
  // Every key of a mask query is either boosted or suppressed, so the shift
  // moves positive-key logits by 2c and all other logits by 0.
  const Eigen::MatrixXd d = (shifted + make_modulation(masks, w1).m) -
                            (s + make_modulation(masks, w0).m);
  for (int i = 0; i < 9; ++i) {
    if (l[i] != 'm') continue;
    for (int j = 0; j < 9; ++j) {
      CHECK(d(i, j) == doctest::Approx(l[j] == 'p' ? 2 * c : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("window predicate") {
  RefocusConfig cfg;
  CHECK(window_active(0.85, cfg));
  CHECK_FALSE(window_active(0.5, cfg));
  CHECK(window_active(0.7, cfg));
  CHECK(window_active(1.0, cfg));
  CHECK_FALSE(window_active(0.0, cfg));
  RefocusConfig bad = cfg;
  bad.lambda_pos = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.window_lo = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("refocus hook builds M from the pooled map and fresh scores") {
  Rng rng(10);
  const std::string fine = random_labels(64, rng);
  RefocusHook hook(oracle::map_of(fine, 8, 8), {});
  const Eigen::MatrixXd s = random_matrix(16, 16, rng);
  const auto m = hook.modulation({0, 4, 4, 0.9}, s);
  REQUIRE(m.has_value());
  const std::string coarse = oracle::pool(fine, 8, 8, 4, 4);
  const auto [pos, neg] = oracle::pair_masks(coarse);
  const auto [wp, wn] = oracle::weights(s, 0.8, 1.0);
  CHECK((*m - (wp.cwiseProduct(pos) - wn.cwiseProduct(neg))).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_FALSE(hook.modulation({0, 4, 4, 0.5}, s).has_value());
  CHECK(hook.invocations() == 1);
  CHECK_THROWS_AS(hook.modulation({0, 4, 4, 0.9}, random_matrix(9, 9, rng)), Error);
}
