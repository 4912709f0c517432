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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "erasekit/common/codec.hpp"
#include "erasekit/common/rng.hpp"
#include "erasekit/diffusion/clients.hpp"
#include "erasekit/diffusion/schedule.hpp"
#include "erasekit/eval/metrics.hpp"
#include "erasekit/olrd/builder.hpp"
#include "erasekit/olrd/toy_scene.hpp"
#include "erasekit/refocus/label_map.hpp"
#include "erasekit/refocus/modulation.hpp"
#include "erasekit/service/desk.hpp"
#include "erasekit/service/pipeline.hpp"
#include "erasekit/tuning/dataset.hpp"
#include "erasekit/tuning/text_encoder.hpp"
#include "erasekit/tuning/toy_denoiser.hpp"
#include "erasekit/tuning/trainer.hpp"
#include "oracles.hpp"

using namespace erasekit;

namespace {

// Collects failed expectations for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::ostringstream notes;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  int failed = 0;
};

using Clock = std::chrono::steady_clock;

bool run(const std::string& name, double budget_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto start = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (budget_s > 0) {
    std::ostringstream b;
    b << "runtime " << secs << " s exceeds " << budget_s << " s";
    c.expect(secs < budget_s, b.str());
  }
  const bool ok = c.failed == 0;
  std::printf("%s  %-28s %8.2fs  %s", ok ? "PASS" : "FAIL", name.c_str(), secs,
              c.notes.str().c_str());
  for (const auto& f : c.failures) std::printf(" | %s", f.c_str());
  std::printf("\n");
  std::fflush(stdout);
  return ok;
}

std::string random_labels(std::size_t n, Rng& rng) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += "mpn"[rng.index(3)];
  return out;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 3) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

Mask thing_mask(const PanopticScene& scene) {
  for (const auto& s : scene.panoptic.segments) {
    if (s.kind == SegmentKind::kThing) return s.mask;
  }
  return Mask(scene.image.height(), scene.image.width());
}

void refocus_oracle(Check& c) {
  auto compare = [&](const std::string& labels, int h, int w) {
    const auto got = refocus::build_pair_masks(oracle::map_of(labels, h, w));
    const auto [pos, neg] = oracle::pair_masks(labels);
    const long bad = (got.pos.array() != pos.array()).count() +
                     (got.neg.array() != neg.array()).count();
    c.expect(bad == 0, labels + ": " + std::to_string(bad) + " mismatched entries");
    return bad;
  };
  long mismatched = 0;
  int maps = 0;
  for (int code = 0; code < 27; ++code) {
    std::string l;
    for (int i = 0, v = code; i < 3; ++i, v /= 3) l += "mpn"[v % 3];
    mismatched += compare(l, 1, 3);
    ++maps;
  }
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const int h = 1 + static_cast<int>(rng.index(6));
    const int w = 1 + static_cast<int>(rng.index(6));
    mismatched += compare(random_labels(h * w, rng), h, w);
    ++maps;
  }
  c.notes << maps << " maps, " << mismatched << " mismatched entries";
}

void modulation_arithmetic(Check& c) {
  Eigen::MatrixXd row(1, 3);
  row << 1, 3, 2;
  const auto w = refocus::modulation_weights(row, {});
  c.expect(std::abs(w.pos(0, 0) - 2.6) < 1e-12, "w_pos for [1,3,2]");
  c.expect(std::abs(w.neg(0, 0) - 3.0) < 1e-12, "w_neg for [1,3,2]");
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(16));
    const Eigen::MatrixXd s = random_matrix(n, n, rng, 10);
    refocus::RefocusConfig cfg;
    cfg.lambda_pos = rng.uniform();
    cfg.lambda_neg = rng.uniform(0, 2);
    const auto got = refocus::modulation_weights(s, cfg);
    const auto [wp, wn] = oracle::weights(s, cfg.lambda_pos, cfg.lambda_neg);
    worst = std::max({worst, (got.pos - wp).cwiseAbs().maxCoeff(),
                      (got.neg - wn).cwiseAbs().maxCoeff()});
  }
  c.expect(worst <= 1e-9, "max deviation above 1e-9");
  c.notes << "1000 matrices, max deviation " << worst << ", [1,3,2] -> " << w.pos(0, 0)
          << "/" << w.neg(0, 0);
}

void directional_refocus(Check& c) {
  Rng rng(303);
  const refocus::RefocusConfig cfg;
  int instances = 0, rows = 0;
  double worst_sum = 0.0;
  while (instances < 200) {
    const int h = 2 + static_cast<int>(rng.index(3));
    const int w = 2 + static_cast<int>(rng.index(3));
    const std::string l = random_labels(h * w, rng);
    if (l.find('m') == std::string::npos || l.find('p') == std::string::npos) continue;
    const int n = h * w, d = 4;
    const Eigen::MatrixXd q = random_matrix(n, d, rng);
    const Eigen::MatrixXd k = random_matrix(n, d, rng);
    const Eigen::MatrixXd s = q * k.transpose();
    const auto weights = refocus::modulation_weights(s, cfg);
    bool admissible = true;
    for (int i = 0; i < n; ++i) {
      if (l[i] == 'm' && weights.pos(i, 0) + weights.neg(i, 0) <= 0) admissible = false;
    }
    if (!admissible) continue;
    const auto mod = refocus::make_modulation(refocus::build_pair_masks(oracle::map_of(l, h, w)),
                                              weights);
    const Eigen::MatrixXd a = refocus::refocused_attention(q, k, Eigen::MatrixXd::Zero(n, n), d);
    const Eigen::MatrixXd b = refocus::refocused_attention(q, k, mod, d);
    for (int i = 0; i < n; ++i) {
      worst_sum = std::max(worst_sum, std::abs(b.row(i).sum() - 1.0));
      if (l[i] != 'm') continue;
      double pa = 0, pb = 0;
      for (int j = 0; j < n; ++j) {
        if (l[j] == 'p') {
          pa += a(i, j);
          pb += b(i, j);
        }
      }
      c.expect(pb > pa, "positive mass did not increase on " + l);
      ++rows;
    }
    ++instances;
  }
  c.expect(worst_sum <= 1e-6, "row sums off by more than 1e-6");
  c.notes << instances << " instances, " << rows << " mask rows, max |row sum - 1| "
          << worst_sum;
}

struct Moments {
  double mean = 0, var = 0;
  int n = 0;
  double se_mean() const { return std::sqrt(var / n); }
  double se_var() const { return var * std::sqrt(2.0 / (n - 1)); }
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = static_cast<int>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= m.n;
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= m.n - 1;
  return m;
}

void noising_statistics(Check& c) {
  const auto schedule = diffusion::default_schedule();
  const int n = 10000;
  const double x0 = 0.7;
  for (const int t : {50, 300, 800}) {
    Rng rng({404, static_cast<std::uint64_t>(t)});
    std::vector<double> closed(n), chain(n);
    const diffusion::LatentState z0{Latent(1, 1, 1, x0), 0};
    for (int i = 0; i < n; ++i) {
      closed[i] = diffusion::forward_noise(z0, t, schedule, Latent(1, 1, 1, rng.normal())).z.at(0, 0);
      double z = x0;
      for (int s = 1; s <= t; ++s) {
        const double beta = schedule.betas[s - 1];
        z = std::sqrt(1 - beta) * z + std::sqrt(beta) * rng.normal();
      }
      chain[i] = z;
    }
    const double ab = schedule.alpha_bar(t);
    const double mu = std::sqrt(ab) * x0, var = 1 - ab;
    const Moments a = moments(closed), b = moments(chain);
    const std::string tag = "t=" + std::to_string(t);
    c.expect(std::abs(a.mean - mu) < 3 * std::sqrt(var / n), tag + " sample mean vs closed form");
    c.expect(std::abs(a.var - var) < 3 * var * std::sqrt(2.0 / (n - 1)),
             tag + " sample variance vs closed form");
    c.expect(std::abs(b.mean - mu) < 3 * std::sqrt(var / n), tag + " chain mean vs closed form");
    c.expect(std::abs(b.var - var) < 3 * var * std::sqrt(2.0 / (n - 1)),
             tag + " chain variance vs closed form");
    c.expect(std::abs(a.mean - b.mean) < 3 * std::hypot(a.se_mean(), b.se_mean()),
             tag + " sample mean vs chain");
    c.expect(std::abs(a.var - b.var) < 3 * std::hypot(a.se_var(), b.se_var()),
             tag + " sample variance vs chain");
    c.notes << tag << " mean " << a.mean << "/" << b.mean << "/" << mu << " var " << a.var
            << "/" << b.var << "/" << var << "; ";
  }
}

std::vector<tuning::TrainSample> toy_samples(int count, int size) {
  olrd::EchoVlm vlm;
  std::vector<olrd::ErasureSample> records;
  for (int i = 0; records.size() < static_cast<std::size_t>(count); ++i) {
    try {
      records.push_back(olrd::build_sample(olrd::toy_scene(i, size),
                                           "scene" + std::to_string(i), i, vlm));
    } catch (const Error&) {
    }
  }
  diffusion::PoolingVae vae;
  return tuning::training_samples(records, vae);
}

void gradient_check(Check& c) {
  using namespace tuning;
  const auto samples = toy_samples(1, 64);
  ToyTextEncoder enc;
  ToyDenoiser net;
  const auto schedule = diffusion::default_schedule();
  Rng rng(505);

  // Zero-initialised adapters: identical outputs.
  AdapterMap adapters = net.make_adapters(4, 1.0, 2.0, rng);
  Latent x(8, 8, 9);
  for (auto& v : x.values()) v = rng.normal();
  const Eigen::MatrixXd text = enc.encode("A photo of R_* grass");
  c.expect(net.predict(x, 500, text, &adapters) == net.predict(x, 500, text, nullptr),
           "zero-init adapters changed the output");

  for (auto& [name, a] : adapters) {
    for (Eigen::Index i = 0; i < a.up.size(); ++i) a.up.data()[i] = 0.05 * rng.normal();
  }
  const PlaceholderToken token = initial_placeholder(enc);
  auto draws = draw_step(samples, schedule, rng);
  draws[0].t = 400;
  draws[0].u = 0.1;
  const StepResult r = training_step(samples, token, adapters, schedule, net, enc, draws);
  auto loss_at = [&](const PlaceholderToken& tk, const AdapterMap& ad) {
    return training_step(samples, tk, ad, schedule, net, enc, draws).loss;
  };
  const double h = 1e-5;
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
  };
  double worst_v = 0.0;
  for (Eigen::Index i = 0; i < token.embedding.size(); ++i) {
    PlaceholderToken p = token, m = token;
    p.embedding(i) += h;
    m.embedding(i) -= h;
    worst_v = std::max(worst_v, rel(r.grad_embedding(i),
                                    (loss_at(p, adapters) - loss_at(m, adapters)) / (2 * h)));
  }
  c.expect(worst_v < 1e-3, "v_* gradient relative error above 1e-3");
  c.expect(r.grad_embedding.norm() > 0, "v_* gradient is zero");

  double worst_a = 0.0;
  int checked = 0;
  for (const auto& target : ToyDenoiser::adapter_targets()) {
    for (int part = 0; part < 2; ++part) {
      const auto& a = adapters.at(target);
      const Eigen::Index n = part == 0 ? a.down.size() : a.up.size();
      const Eigen::MatrixXd& g = part == 0 ? r.grad_adapters.at(target).down
                                           : r.grad_adapters.at(target).up;
      for (Eigen::Index i = 0; i < n; ++i) {
        AdapterMap p = adapters, m = adapters;
        (part == 0 ? p.at(target).down : p.at(target).up).data()[i] += h;
        (part == 0 ? m.at(target).down : m.at(target).up).data()[i] -= h;
        worst_a = std::max(worst_a, rel(g.data()[i], (loss_at(token, p) - loss_at(token, m)) / (2 * h)));
        ++checked;
      }
    }
  }
  c.expect(worst_a < 1e-3, "adapter gradient relative error above 1e-3");

  bool frozen_zero = r.grad_frozen.size() == net.frozen().size();
  for (const auto& [name, g] : r.grad_frozen) frozen_zero = frozen_zero && g.isZero(0);
  c.expect(frozen_zero, "frozen gradients are not exactly zero");
  c.notes << "max rel error v_* " << worst_v << ", adapters " << worst_a << " over "
          << checked << " entries, " << r.grad_frozen.size() << " frozen tensors zero";
}

void toy_training(Check& c) {
  using namespace tuning;
  const auto samples = toy_samples(1, 128);
  c.expect(samples[0].original_latent.height() == 16, "expected a 16x16 latent");
  const auto schedule = diffusion::default_schedule();
  TrainConfig cfg;
  cfg.steps = 500;
  cfg.lr = 1e-4;
  cfg.seed = 0;
  cfg.fixed_batch = true;
  auto once = [&] {
    ToyDenoiser net;
    ToyTextEncoder enc;
    return train(cfg, samples, net, enc, schedule);
  };
  const auto a = once();
  const auto b = once();
  c.expect(a.losses.size() == 500, "expected 500 losses");
  const double first = a.losses.front(), last = a.losses.back();
  c.expect(last < 0.1 * first, "final loss not below 10% of the initial loss");
  c.expect(a.losses == b.losses && a.token.embedding == b.token.embedding,
           "two runs with the same seed differ");
  c.notes << "loss " << first << " -> " << last << " (ratio " << last / first
          << "), repeat run identical: " << (a.losses == b.losses ? "yes" : "no");
}

void olrd_validator(Check& c) {
  olrd::EchoVlm echo;
  int valid = 0;
  for (int i = 0; i < 20; ++i) {
    const auto scene = olrd::toy_scene(i);
    const std::string id = "toy" + std::to_string(i);
    const auto s = olrd::build_sample(scene, id, 1000 + i, echo);
    const std::string why = oracle::validate_sample(s, scene);
    c.expect(why.empty(), id + ": " + why);
    const auto again = olrd::build_sample(scene, id, 1000 + i, echo);
    const bool same = encode_png(again.blended) == encode_png(s.blended) &&
                      again.shifted_mask == s.shifted_mask && again.caption == s.caption;
    c.expect(same, id + ": not deterministic");
    valid += why.empty() && same;
  }
  c.notes << valid << "/20 samples valid and reproducible";
}

void metric_harness(Check& c) {
  const Image a(32, 32, 3, 100), b(32, 32, 3, 116);
  const double p = eval::psnr(a, b);
  const double expected = 10 * std::log10(255.0 * 255.0 / 256.0);
  c.expect(std::abs(p - expected) < 1e-3, "PSNR for a uniform difference of 16");

  Rng rng(808);
  Eigen::MatrixXd x(50, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const double self = eval::fid(x, x);
  c.expect(std::abs(self) < 1e-6, "fid(X, X) not zero");

  const int n = 100000;
  Eigen::MatrixXd g0(n, 1), g1(n, 1);
  for (int i = 0; i < n; ++i) {
    g0(i, 0) = rng.normal();
    g1(i, 0) = 1.0 + rng.normal();
  }
  const double one = eval::fid(g0, g1);
  c.expect(std::abs(one - 1.0) < 0.05, "1-D Gaussian FID not within 0.05 of 1");

  // Content extent round(side * 512 / longest); the odd pad line goes last.
  auto zero_line = [](const Image& im, int i, bool row) {
    const int n = row ? im.width() : im.height();
    for (int j = 0; j < n; ++j) {
      for (int ch = 0; ch < 3; ++ch) {
        if ((row ? im.at(i, j, ch) : im.at(j, i, ch)) != 0) return false;
      }
    }
    return true;
  };
  int cases = 0;
  for (const auto& [h, w] : std::vector<std::pair<int, int>>{
           {512, 512}, {768, 1024}, {500, 2000}, {2000, 500}, {331, 1000}, {1000, 331}, {100, 60}}) {
    Image im(h, w, 3);
    for (auto& v : im.values()) v = static_cast<std::uint8_t>(rng.integer(1, 255));
    const Image out = eval::resize_pad_512(im);
    const int longest = std::max(h, w);
    const int ch = static_cast<int>(std::lround(static_cast<double>(h) * 512 / longest));
    const int cw = static_cast<int>(std::lround(static_cast<double>(w) * 512 / longest));
    const int top = (512 - ch) / 2, left = (512 - cw) / 2;
    bool ok = out.height() == 512 && out.width() == 512;
    for (int y = 0; ok && y < 512; ++y) {
      ok = zero_line(out, y, true) == (y < top || y >= top + ch);
    }
    for (int x = 0; ok && x < 512; ++x) {
      ok = zero_line(out, x, false) == (x < left || x >= left + cw);
    }
    if (h == 512 && w == 512) ok = ok && out == im;
    c.expect(ok, std::to_string(h) + "x" + std::to_string(w) + " resize arithmetic");
    ++cases;
  }
  c.notes << "PSNR " << p << " dB (oracle " << expected << "), fid(X,X) " << self
          << ", 1-D FID " << one << ", " << cases << " resize cases";
}

void desk_run(Check& c) {
  service::DeskStack desk;
  const service::EraseConfig base;
  int runs = 0;
  std::size_t background = 0;
  for (const int index : {0, 3, 6}) {
    const auto scene = olrd::toy_scene(index);
    const Mask mask = thing_mask(scene);
    c.expect(mask.any(), "scene without an object");
    for (const std::uint64_t seed : {0ULL, 1ULL}) {
      service::EraseConfig cfg = base;
      cfg.seed = seed;
      const Image a = service::erase(scene.image, mask, cfg, desk.clients());
      const Image b = service::erase(scene.image, mask, cfg, desk.clients());
      const std::string tag = "scene " + std::to_string(index) + " seed " + std::to_string(seed);
      c.expect(a == b, tag + ": repeated run differs");
      c.expect(a.same_shape(scene.image), tag + ": output shape");
      std::size_t diff = 0;
      for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
          if (!oracle::outside_band(mask, y, x, cfg.feather)) continue;
          ++background;
          for (int ch = 0; ch < 3; ++ch) diff += a.at(y, x, ch) != scene.image.at(y, x, ch);
        }
      }
      c.expect(diff == 0, tag + ": background changed");
      ++runs;
    }
  }
  c.notes << runs << " runs on 64x64 scenes, " << background
          << " background pixels checked, outputs repeatable";
}

}  // namespace

int main() {
  int failed = 0;
  failed += !run("refocus-oracle", 30, refocus_oracle);
  failed += !run("modulation-arithmetic", 0, modulation_arithmetic);
  failed += !run("directional-refocus", 0, directional_refocus);
  failed += !run("noising-statistics", 60, noising_statistics);
  failed += !run("gradient-check", 0, gradient_check);
  failed += !run("toy-training", 600, toy_training);
  failed += !run("olrd-validator", 0, olrd_validator);
  failed += !run("metric-harness", 0, metric_harness);
  failed += !run("desk-run", 0, desk_run);
  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
