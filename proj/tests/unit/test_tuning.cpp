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
#include <filesystem>

#include "erasekit/common/rng.hpp"
#include "erasekit/diffusion/clients.hpp"
#include "erasekit/diffusion/conditioning.hpp"
#include "erasekit/olrd/builder.hpp"
#include "erasekit/olrd/toy_scene.hpp"
#include "erasekit/tuning/dataset.hpp"
#include "erasekit/tuning/lora.hpp"
#include "erasekit/tuning/prompt.hpp"
#include "erasekit/tuning/text_encoder.hpp"
#include "erasekit/tuning/toy_denoiser.hpp"
#include "erasekit/tuning/trainer.hpp"

using namespace erasekit;
using namespace erasekit::tuning;

namespace {

std::vector<TrainSample> toy_samples(int count, int size = 64) {
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
  return training_samples(records, vae);
}

// Panoptic from a character grid: 'g' grass, 'v' gravel, 's' sheep.
Panoptic grid_panoptic(const std::vector<std::string>& rows) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows[0].size());
  Panoptic p{h, w, {}};
  const std::pair<char, Segment> defs[] = {
      {'g', {1, "grass", SegmentKind::kStuff, Mask(h, w)}},
      {'v', {2, "gravel", SegmentKind::kStuff, Mask(h, w)}},
      {'s', {3, "sheep", SegmentKind::kThing, Mask(h, w)}}};
  for (const auto& [c, seg] : defs) {
    Segment s = seg;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) s.mask.at(y, x) = rows[y][x] == c;
    }
    p.segments.push_back(s);
  }
  return p;
}

}  // namespace

TEST_CASE("simple prompt examples") {
  const std::vector<BackgroundTag> sky{{"sky", 0, 10}};
  CHECK(build_simple_prompt(sky) == "A photo of R_* sky");
  const std::vector<BackgroundTag> beach{{"beach", 3, 1}};
  CHECK(build_simple_prompt(beach) == "A photo of R_* beach");
  CHECK_THROWS_AS(build_simple_prompt(std::vector<BackgroundTag>{}), Error);
  const std::vector<BackgroundTag> tie{{"sand", 2, 5}, {"water", 2, 9}};
  CHECK(build_simple_prompt(tie) == "A photo of R_* water");
}

TEST_CASE("adjacency decides between grass and gravel") {
  const Panoptic p = grid_panoptic({"gggvvvvv",
                                    "gssvvvvv",
                                    "gssvvvvv",
                                    "gggvvvvv"});
  Mask erase(4, 8);
  erase.at(1, 1) = erase.at(1, 2) = erase.at(2, 1) = erase.at(2, 2) = 1;
  // Oracle: count 4-neighbour contacts from mask pixels into each category.
  std::map<std::string, std::size_t> contacts;
  const int dy[] = {-1, 1, 0, 0};
  const int dx[] = {0, 0, -1, 1};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) {
      if (!erase.test(y, x)) continue;
      for (int k = 0; k < 4; ++k) {
        const int ny = y + dy[k], nx = x + dx[k];
        if (ny < 0 || nx < 0 || ny >= 4 || nx >= 8 || erase.test(ny, nx)) continue;
        for (const auto& s : p.segments) {
          if (s.mask.test(ny, nx) && s.kind == SegmentKind::kStuff) ++contacts[s.category];
        }
      }
    }
  }
  const auto tags = rank_background_tags(p, erase);
  REQUIRE(tags.size() == 2);
  CHECK(tags[0].name == "gravel");  // larger area first
  for (const auto& t : tags) CHECK(t.adjacency == contacts[t.name]);
  CHECK(contacts["grass"] > contacts["gravel"]);
  CHECK(build_simple_prompt(tags) == "A photo of R_* grass");
}

TEST_CASE("prompt mix") {
  const PromptPair pair{"simple", "caption"};
  CHECK(prompt_mix(pair, 0.2) == "simple");
  CHECK(prompt_mix(pair, 0.9) == "caption");
  Rng rng(44);
  int simple = 0;
  for (int i = 0; i < 10000; ++i) simple += prompt_mix(pair, rng.uniform()) == "simple";
  CHECK(simple / 10000.0 >= 0.48);
  CHECK(simple / 10000.0 <= 0.52);
}

TEST_CASE("lora arithmetic") {
  LoraAdapter a{"x", Eigen::MatrixXd(1, 2), Eigen::MatrixXd(2, 1), 1.0};
  a.down << 1, 0;
  a.up << 1, 0;
  Eigen::MatrixXd expected(2, 2);
  expected << 2, 0, 0, 1;
  CHECK(apply_lora(Eigen::MatrixXd::Identity(2, 2), a) == expected);

  Rng rng(1);
  const auto z = make_lora("y", 6, 5, 4, 1.0, 2.0, rng);
  const Eigen::MatrixXd base = Eigen::MatrixXd::Random(6, 5);
  CHECK(apply_lora(base, z) == base);
  CHECK(z.parameter_count() == 4 * (5 + 6));
  CHECK_THROWS_AS(apply_lora(Eigen::MatrixXd::Zero(5, 5), z), Error);
}

TEST_CASE("text encoder") {
  ToyTextEncoder enc;
  const auto ids = enc.tokenize("A photo of R_* sky");
  REQUIRE(ids.size() == 6);
  CHECK(ids[0] == enc.begin_id());
  CHECK(ids[4] == enc.placeholder_id());
  CHECK(enc.encode("A photo of R_* sky") == enc.encode("A photo of R_* sky"));
  CHECK(enc.encode("x").cols() == enc.width());
}

TEST_CASE("zero-initialized adapters reproduce the base model bit for bit") {
  ToyDenoiser net;
  Rng rng(3);
  const auto adapters = net.make_adapters(4, 1.0, 2.0, rng);
  Latent x(6, 4, 9);
  for (auto& v : x.values()) v = rng.normal();
  const Eigen::MatrixXd text = Eigen::MatrixXd::Random(5, 32);
  CHECK(net.predict(x, 321, text, &adapters) == net.predict(x, 321, text, nullptr));
  CHECK_THROWS_AS(net.predict(Latent(5, 4, 9), 1, text, nullptr), Error);
}

TEST_CASE("perfect prediction gives zero loss") {
  const auto samples = toy_samples(1);
  ToyTextEncoder enc;
  const auto token = initial_placeholder(enc);
  const auto schedule = diffusion::default_schedule();
  Rng rng(5);
  const auto draws = draw_step(samples, schedule, rng);
  const Latent eps = draws[0].eps;
  diffusion::NoisePredictor perfect = [&](const Latent&, int, const Eigen::MatrixXd&,
                                          diffusion::SelfAttentionHook*, double) {
    return eps;
  };
  CHECK(step_loss(samples, token, schedule, perfect, enc, draws) == 0.0);

  ToyDenoiser net;
  const AdapterMap none;
  const double analytic = training_step(samples, token, none, schedule, net, enc, draws).loss;
  CHECK(step_loss(samples, token, schedule, net.predictor(nullptr), enc, draws) ==
        doctest::Approx(analytic).epsilon(1e-12));
}

TEST_CASE("gradients: v_* and a rank-4 adapter match finite differences") {
  const auto samples = toy_samples(1);
  ToyTextEncoder enc;
  ToyDenoiser net;
  const auto schedule = diffusion::default_schedule();
  Rng rng(9);
  AdapterMap adapters = net.make_adapters(4, 1.0, 2.0, rng);
  for (auto& [name, a] : adapters) {
    for (Eigen::Index i = 0; i < a.up.size(); ++i) a.up.data()[i] = 0.05 * rng.normal();
  }
  PlaceholderToken token = initial_placeholder(enc);
  auto draws = draw_step(samples, schedule, rng);
  draws[0].t = 400;
  draws[0].u = 0.1;  // simple prompt, contains the placeholder

  const StepResult r = training_step(samples, token, adapters, schedule, net, enc, draws);
  auto loss_at = [&](const PlaceholderToken& tk, const AdapterMap& ad) {
    return training_step(samples, tk, ad, schedule, net, enc, draws).loss;
  };
  const double h = 1e-5;
  auto rel = [](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
  };

  double worst = 0.0;
  for (Eigen::Index i = 0; i < token.embedding.size(); ++i) {
    PlaceholderToken p = token, m = token;
    p.embedding(i) += h;
    m.embedding(i) -= h;
    const double fd = (loss_at(p, adapters) - loss_at(m, adapters)) / (2 * h);
    worst = std::max(worst, rel(r.grad_embedding(i), fd));
  }
  CHECK(worst < 1e-3);
  CHECK(r.grad_embedding.norm() > 0);

  for (const std::string target : {"self.q", "cross.v"}) {
    double worst_adapter = 0.0;
    for (int part = 0; part < 2; ++part) {
      const Eigen::Index n = part == 0 ? adapters.at(target).down.size()
                                       : adapters.at(target).up.size();
      const Eigen::MatrixXd& g = part == 0 ? r.grad_adapters.at(target).down
                                           : r.grad_adapters.at(target).up;
      for (Eigen::Index i = 0; i < n; ++i) {
        AdapterMap p = adapters, m = adapters;
        (part == 0 ? p.at(target).down : p.at(target).up).data()[i] += h;
        (part == 0 ? m.at(target).down : m.at(target).up).data()[i] -= h;
        const double fd = (loss_at(token, p) - loss_at(token, m)) / (2 * h);
        worst_adapter = std::max(worst_adapter, rel(g.data()[i], fd));
      }
    }
    CHECK_MESSAGE(worst_adapter < 1e-3, target);
  }

  for (const auto& [name, g] : r.grad_frozen) {
    CHECK_MESSAGE(g.isZero(0), name);
  }
  CHECK(r.grad_frozen.size() == net.frozen().size());

  // Caption branch without the placeholder: no gradient reaches v_*.
  draws[0].u = 0.9;
  const StepResult c = training_step(samples, token, adapters, schedule, net, enc, draws);
  CHECK(c.grad_embedding.isZero(0));
}

TEST_CASE("init_placeholder") {
  const auto samples = toy_samples(4);
  ToyDenoiser net;
  const auto schedule = diffusion::default_schedule();

  ToyTextEncoder enc;
  const auto init = initial_placeholder(enc);
  const Eigen::VectorXd expected =
      (enc.embedding_table().row(enc.token_id("background")) +
       enc.embedding_table().row(enc.token_id("scenery"))).transpose() / 2.0;
  CHECK((init.embedding - expected).norm() == 0.0);
  CHECK(init_placeholder(samples, 0, net, enc, schedule, 1).embedding == expected);

  ToyTextEncoder fresh;
  const Eigen::MatrixXd before = fresh.embedding_table();
  std::vector<double> losses;
  const auto learned = init_placeholder(samples, 200, net, fresh, schedule, 1, 1e-4, &losses);
  CHECK(losses.size() == 200);
  CHECK(learned.embedding.allFinite());
  const Eigen::MatrixXd after = fresh.embedding_table();
  for (Eigen::Index r = 0; r < before.rows(); ++r) {
    if (r == fresh.placeholder_id()) {
      CHECK(after.row(r) != before.row(r));
    } else {
      CHECK(after.row(r) == before.row(r));
    }
  }

  // Evaluate the same fixed draws before and after training.
  std::vector<StepDraw> eval;
  Rng rng(123);
  for (const auto& s : samples) {
    auto d = draw_step(std::span<const TrainSample>(&s, 1), schedule, rng);
    d[0].u = 0.0;
    eval.push_back(d[0]);
  }
  const AdapterMap none;
  ToyTextEncoder probe;
  const double start = training_step(samples, init, none, schedule, net, probe, eval).loss;
  const double end = training_step(samples, learned, none, schedule, net, probe, eval).loss;
  MESSAGE("placeholder loss " << start << " -> " << end);
  CHECK(end < start);

  CHECK_THROWS_AS(init_placeholder({}, 1, net, enc, schedule, 1), Error);
}

TEST_CASE("train: empty dataset") {
  ToyTextEncoder enc;
  ToyDenoiser net;
  try {
    train({}, {}, net, enc, diffusion::default_schedule());
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptDataset);
  }
}

TEST_CASE("train: resume reproduces the uninterrupted step") {
  const auto samples = toy_samples(6);
  ToyDenoiser net;
  const auto schedule = diffusion::default_schedule();
  TrainConfig cfg;
  cfg.steps = 101;
  cfg.seed = 4;

  ToyTextEncoder e1;
  const auto full = train(cfg, samples, net, e1, schedule);
  REQUIRE(full.losses.size() == 101);

  const auto dir = std::filesystem::temp_directory_path() / "erasekit-resume-test";
  std::filesystem::remove_all(dir);
  FileCheckpointSink sink(dir);
  TrainConfig first = cfg;
  first.steps = 100;
  first.checkpoint_every = 100;
  ToyTextEncoder e2;
  const auto part = train(first, samples, net, e2, schedule, &sink);
  const auto ckpt = load_checkpoint(dir / "latest.json");
  CHECK(ckpt.step == 100);

  ToyTextEncoder e3;
  const auto resumed = train(cfg, samples, net, e3, schedule, nullptr, &ckpt);
  REQUIRE(resumed.losses.size() == 1);
  CHECK(resumed.losses[0] == full.losses[100]);
  CHECK(resumed.token.embedding == full.token.embedding);
  for (int i = 0; i < 100; ++i) CHECK(part.losses[i] == full.losses[i]);

  TrainConfig other = cfg;
  other.lr = 2e-4;
  CHECK_THROWS_AS(train(other, samples, net, e3, schedule, nullptr, &ckpt), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train: only v_* and adapters change") {
  const auto samples = toy_samples(2);
  ToyDenoiser net;
  const auto frozen = net.frozen();
  ToyTextEncoder enc;
  const Eigen::MatrixXd table = enc.embedding_table();
  TrainConfig cfg;
  cfg.steps = 5;
  const auto result = train(cfg, samples, net, enc, diffusion::default_schedule());
  CHECK(net.frozen() == frozen);
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    if (r != enc.placeholder_id()) CHECK(enc.embedding_table().row(r) == table.row(r));
  }
  CHECK(result.adapters.size() == ToyDenoiser::adapter_targets().size());
}

TEST_CASE("train: 2-epoch smoothed loss is non-increasing (window 50)") {
  const auto samples = toy_samples(64);
  ToyDenoiser net;
  ToyTextEncoder enc;
  TrainConfig cfg;
  cfg.steps = 2 * static_cast<int>(samples.size());
  cfg.seed = 0;
  std::vector<double> telemetry;
  train(cfg, samples, net, enc, diffusion::default_schedule(), nullptr, nullptr,
        [&](int, double loss) { telemetry.push_back(loss); });
  REQUIRE(telemetry.size() == samples.size() * 2);
  const std::size_t window = 50;
  std::vector<double> smooth;
  double acc = 0.0;
  for (std::size_t i = 0; i < telemetry.size(); ++i) {
    acc += telemetry[i];
    if (i >= window) acc -= telemetry[i - window];
    if (i + 1 >= window) smooth.push_back(acc / window);
  }
  std::size_t rises = 0;
  for (std::size_t i = 1; i < smooth.size(); ++i) rises += smooth[i] > smooth[i - 1];
  MESSAGE("smoothed loss " << smooth.front() << " -> " << smooth.back() << ", "
                           << rises << " rises over " << smooth.size() - 1 << " steps");
  CHECK(rises == 0);
}
