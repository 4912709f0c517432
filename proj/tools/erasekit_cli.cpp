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

// Command-line front end: erase, serve, build-dataset, train, eval.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "erasekit/common/codec.hpp"
#include "erasekit/common/error.hpp"
#include "erasekit/common/rle.hpp"
#include "erasekit/diffusion/clients.hpp"
#include "erasekit/diffusion/schedule.hpp"
#include "erasekit/eval/metrics.hpp"
#include "erasekit/olrd/builder.hpp"
#include "erasekit/olrd/toy_scene.hpp"
#include "erasekit/service/desk.hpp"
#include "erasekit/service/http_api.hpp"
#include "erasekit/service/jobs.hpp"
#include "erasekit/service/pipeline.hpp"
#include "erasekit/tuning/dataset.hpp"
#include "erasekit/tuning/trainer.hpp"

namespace fs = std::filesystem;
using namespace erasekit;

namespace {

service::HttpApi* g_api = nullptr;

void on_signal(int) {
  if (g_api != nullptr) g_api->stop();
}

Mask load_mask(const fs::path& path) {
  if (path.extension() == ".json") {
    const auto bytes = read_file(path);
    return rle_decode(rle_from_json(nlohmann::json::parse(bytes.begin(), bytes.end())));
  }
  return read_png_mask(path);
}

void configure_desk(service::DeskStack& desk, const std::string& weights) {
  const auto env = service::read_environment();
  if (!weights.empty()) {
    desk.load_tuned(weights);
  } else if (env.model_dir && fs::exists(*env.model_dir / "latest.json")) {
    desk.load_tuned(*env.model_dir);
  }
}

int run_erase(const fs::path& image_path, const fs::path& mask_path, const fs::path& out,
              service::EraseConfig cfg, const std::string& weights) {
  service::DeskStack desk;
  configure_desk(desk, weights);
  service::EraseTrace trace;
  const Image result = service::erase(read_png_rgb(image_path), load_mask(mask_path), cfg,
                                      desk.clients(), &trace);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_png(out, result);
  std::cout << "prompt: " << trace.prompt << "\n"
            << "steps: " << trace.start_step << "/" << trace.sampling_steps
            << "  refocus calls: " << trace.refocus_invocations << "\n"
            << "wrote " << out.string() << "\n";
  return 0;
}

int run_serve(const std::string& host, int port, const fs::path& store_dir,
              std::size_t capacity, const std::string& weights) {
  service::DeskStack desk;
  configure_desk(desk, weights);
  service::JobStore store(store_dir);
  auto clients = desk.clients();
  service::JobService jobs(store,
                           [&clients](const Image& image, const Mask& mask,
                                      const service::EraseConfig& cfg,
                                      const service::StageListener& on_stage) {
                             return service::erase(image, mask, cfg, clients, nullptr,
                                                   on_stage);
                           },
                           capacity);
  service::HttpApi api(jobs, desk.segmenter());
  const int bound = api.bind(host, port);
  if (bound < 0) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  g_api = &api;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  jobs.start();
  std::cout << "listening on " << host << ":" << bound << std::endl;
  api.listen();
  jobs.stop();
  g_api = nullptr;
  return 0;
}

int run_build_dataset(const fs::path& out, int scenes, int per_scene, std::uint64_t seed,
                      const std::string& vlm_name, int shard_size) {
  olrd::EchoVlm echo;
  olrd::UnavailableVlm none;
  olrd::VlmClient& vlm = vlm_name == "none" ? static_cast<olrd::VlmClient&>(none) : echo;
  std::vector<olrd::ErasureSample> samples;
  int skipped = 0;
  for (int i = 0; i < scenes; ++i) {
    const auto scene = olrd::toy_scene(i);
    for (int k = 0; k < per_scene; ++k) {
      const std::uint64_t s = seed * 1000003ULL + static_cast<std::uint64_t>(i) * 131ULL + k;
      try {
        samples.push_back(olrd::build_sample(scene, "toy" + std::to_string(i), s, vlm));
      } catch (const Error& e) {
        std::cerr << "scene " << i << ": " << e.what() << "\n";
        ++skipped;
      }
    }
  }
  const auto manifest = olrd::write_dataset(samples, out, shard_size);
  std::cout << "wrote " << manifest.samples.size() << " samples to " << out.string()
            << " (" << skipped << " skipped)\n";
  return 0;
}

int run_train(const fs::path& dataset, const fs::path& out, tuning::TrainConfig cfg,
              const std::string& resume, int ti_steps) {
  const auto records = olrd::read_dataset(dataset);
  diffusion::PoolingVae vae;
  const auto samples = tuning::training_samples(records, vae);
  tuning::ToyDenoiser denoiser;
  tuning::ToyTextEncoder encoder;
  const auto schedule = diffusion::default_schedule();
  tuning::FileCheckpointSink sink(out);

  std::optional<tuning::TrainCheckpoint> ckpt;
  if (!resume.empty()) ckpt = tuning::load_checkpoint(resume);
  std::optional<tuning::PlaceholderToken> warm;
  if (!ckpt && ti_steps > 0) {
    const std::size_t n = std::min<std::size_t>(samples.size(), 256);
    warm = tuning::init_placeholder(std::span(samples).first(n), ti_steps, denoiser, encoder,
                                    schedule, cfg.seed, cfg.lr);
  }
  if (cfg.checkpoint_every <= 0) cfg.checkpoint_every = cfg.steps;
  const auto result = tuning::train(
      cfg, samples, denoiser, encoder, schedule, &sink, ckpt ? &*ckpt : nullptr,
      [](int step, double loss) {
        if (step % 50 == 0) std::cout << "step " << step << " loss " << loss << std::endl;
      },
      warm ? &*warm : nullptr);
  std::cout << "finished at step " << result.final_step << "; checkpoints in "
            << out.string() << "\n";
  return 0;
}

int run_eval(const fs::path& results, const fs::path& refs, const fs::path& out) {
  eval::PixelStatsExtractor fx;
  const auto report = eval::evaluate(results, refs, fx);
  eval::write_report(report, out);
  std::cout << eval::format_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object erasure toolkit"};
  app.require_subcommand(1);

  std::string weights;
  app.add_option("--weights", weights, "Training checkpoint (file or directory)");

  auto* erase = app.add_subcommand("erase", "Erase the masked region of an image");
  std::string e_image, e_mask, e_out;
  service::EraseConfig e_cfg;
  bool e_no_refocus = false;
  erase->add_option("--image", e_image, "Input PNG")->required();
  erase->add_option("--mask", e_mask, "Mask PNG (nonzero = erase) or RLE JSON")->required();
  erase->add_option("--out", e_out, "Output PNG")->required();
  erase->add_option("--strength", e_cfg.strength, "Denoising strength in (0, 1]");
  erase->add_option("--seed", e_cfg.seed, "Sampler seed");
  erase->add_option("--steps", e_cfg.steps, "Sampling steps");
  erase->add_option("--guidance", e_cfg.guidance, "Classifier-free guidance scale");
  erase->add_flag("--no-refocus", e_no_refocus, "Disable attention refocus");

  auto* serve = app.add_subcommand("serve", "Run the HTTP job service");
  std::string s_host = "127.0.0.1", s_store;
  int s_port = 8080;
  std::size_t s_capacity = 64;
  serve->add_option("--host", s_host, "Bind address");
  serve->add_option("--port", s_port, "Port (0 picks one)");
  serve->add_option("--store", s_store, "Job store directory")->required();
  serve->add_option("--capacity", s_capacity, "Maximum queued jobs");

  auto* build = app.add_subcommand("build-dataset", "Build an OLRD dataset from toy scenes");
  std::string b_out, b_vlm = "echo";
  int b_scenes = 20, b_per_scene = 1, b_shard = 1000;
  std::uint64_t b_seed = 0;
  build->add_option("--out", b_out, "Output directory")->required();
  build->add_option("--scenes", b_scenes, "Number of toy scenes");
  build->add_option("--per-scene", b_per_scene, "Samples per scene");
  build->add_option("--seed", b_seed, "Base seed");
  build->add_option("--vlm", b_vlm, "Captioner: echo or none")->check(CLI::IsMember({"echo", "none"}));
  build->add_option("--shard-size", b_shard, "Samples per manifest shard");

  auto* train = app.add_subcommand("train", "Tune v_* and LoRA adapters on a dataset");
  std::string t_dataset, t_out = "checkpoints", t_resume;
  tuning::TrainConfig t_cfg;
  int t_ti_steps = 0;
  train->add_option("--dataset", t_dataset, "OLRD directory")->required();
  train->add_option("--out", t_out, "Checkpoint directory");
  train->add_option("--steps", t_cfg.steps, "Total optimizer steps");
  train->add_option("--lr", t_cfg.lr, "Learning rate");
  train->add_option("--rank", t_cfg.rank, "LoRA rank");
  train->add_option("--batch", t_cfg.batch, "Batch size");
  train->add_option("--seed", t_cfg.seed, "Seed");
  train->add_option("--checkpoint-every", t_cfg.checkpoint_every, "Checkpoint interval");
  train->add_option("--resume", t_resume, "Checkpoint to resume from");
  train->add_option("--ti-steps", t_ti_steps, "Textual-inversion warm-start steps");

  auto* evaluate = app.add_subcommand("eval", "Score results against references");
  std::string v_results, v_refs, v_out = "report.json";
  evaluate->add_option("--results", v_results, "Result PNG directory")->required();
  evaluate->add_option("--refs", v_refs, "Reference PNG directory")->required();
  evaluate->add_option("--out", v_out, "Report JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*erase) {
      e_cfg.refocus.enabled = !e_no_refocus;
      return run_erase(e_image, e_mask, e_out, e_cfg, weights);
    }
    if (*serve) return run_serve(s_host, s_port, s_store, s_capacity, weights);
    if (*build) return run_build_dataset(b_out, b_scenes, b_per_scene, b_seed, b_vlm, b_shard);
    if (*train) return run_train(t_dataset, t_out, t_cfg, t_resume, t_ti_steps);
    if (*evaluate) return run_eval(v_results, v_refs, v_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
