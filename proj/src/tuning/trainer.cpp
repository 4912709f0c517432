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

#include "erasekit/tuning/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numeric>

#include "erasekit/common/codec.hpp"
#include "erasekit/common/error.hpp"
#include "erasekit/diffusion/conditioning.hpp"

namespace erasekit::tuning {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    fail(ErrorCode::kInvalidArgument, "matrix payload has the wrong size");
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

void check_sample(const TrainSample& s) {
  const Latent& z = s.original_latent;
  if (z.channels() != diffusion::kLatentChannels ||
      !s.masked_latent.same_shape(z) ||
      !s.mask.same_extent(z.height(), z.width()) || s.mask.channels() != 1) {
    fail(ErrorCode::kCorruptDataset, "sample " + s.id + " has inconsistent latents");
  }
  if (s.simple_prompt.empty() || s.caption_prompt.empty()) {
    fail(ErrorCode::kCorruptDataset, "sample " + s.id + " has an empty prompt");
  }
}

}  // namespace

PlaceholderToken initial_placeholder(const TextEncoderClient& encoder) {
  const auto& table = encoder.embedding_table();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(table.cols());
  for (const auto& word : placeholder_seed_words()) {
    mean += table.row(encoder.token_id(word)).transpose();
  }
  PlaceholderToken token;
  token.embedding = mean / static_cast<double>(placeholder_seed_words().size());
  return token;
}

std::vector<StepDraw> draw_step(std::span<const TrainSample> batch,
                                const diffusion::NoiseSchedule& schedule,
                                Rng& rng) {
  std::vector<StepDraw> draws;
  draws.reserve(batch.size());
  for (const auto& s : batch) {
    StepDraw d;
    d.t = static_cast<int>(rng.integer(1, schedule.steps));
    const Latent& z = s.original_latent;
    d.eps = Latent(z.height(), z.width(), z.channels());
    for (auto& v : d.eps.values()) v = rng.normal();
    d.u = rng.uniform();
    draws.push_back(std::move(d));
  }
  return draws;
}

double step_loss(std::span<const TrainSample> batch,
                 const PlaceholderToken& token,
                 const diffusion::NoiseSchedule& schedule,
                 const diffusion::NoisePredictor& predictor,
                 TextEncoderClient& encoder, std::span<const StepDraw> draws) {
  if (batch.empty() || draws.size() != batch.size()) {
    fail(ErrorCode::kInvalidArgument, "one draw per batch entry is required");
  }
  encoder.set_embedding_row(encoder.placeholder_id(), token.embedding);
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainSample& s = batch[b];
    const StepDraw& d = draws[b];
    check_sample(s);
    const auto zt = diffusion::forward_noise({s.original_latent, 0}, d.t,
                                             schedule, d.eps);
    diffusion::ConditioningBundle cond{
        s.masked_latent, s.mask,
        encoder.encode(prompt_mix({s.simple_prompt, s.caption_prompt}, d.u))};
    const Latent eps_hat =
        predictor(diffusion::assemble_unet_input(zt.z, cond),
                  schedule.timestep(d.t), cond.text, nullptr, 1.0);
    if (!eps_hat.same_shape(d.eps)) {
      fail(ErrorCode::kShapeMismatch, "prediction " + eps_hat.shape_string());
    }
    double se = 0.0;
    for (std::size_t i = 0; i < d.eps.size(); ++i) {
      const double r = eps_hat.values()[i] - d.eps.values()[i];
      se += r * r;
    }
    total += se / static_cast<double>(d.eps.size());
  }
  const double loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) fail(ErrorCode::kNonFiniteLoss, "batch loss is not finite");
  return loss;
}

StepResult training_step(std::span<const TrainSample> batch,
                         const PlaceholderToken& token,
                         const AdapterMap& adapters,
                         const diffusion::NoiseSchedule& schedule,
                         const ToyDenoiser& denoiser,
                         TextEncoderClient& encoder,
                         std::span<const StepDraw> draws) {
  if (batch.empty() || draws.size() != batch.size()) {
    fail(ErrorCode::kInvalidArgument, "one draw per batch entry is required");
  }
  const int pid = encoder.placeholder_id();
  encoder.set_embedding_row(pid, token.embedding);

  StepResult out;
  out.grad_embedding = Eigen::VectorXd::Zero(token.embedding.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainSample& s = batch[b];
    const StepDraw& d = draws[b];
    check_sample(s);
    const auto zt = diffusion::forward_noise({s.original_latent, 0}, d.t,
                                             schedule, d.eps);
    const std::string prompt =
        prompt_mix({s.simple_prompt, s.caption_prompt}, d.u);
    diffusion::ConditioningBundle cond{s.masked_latent, s.mask,
                                       encoder.encode(prompt)};
    const Latent x9 = diffusion::assemble_unet_input(zt.z, cond);

    ToyGradients g;
    const double loss = denoiser.loss_and_grad(x9, schedule.timestep(d.t),
                                               cond.text, d.eps, adapters, &g);
    if (!std::isfinite(loss)) {
      fail(ErrorCode::kNonFiniteLoss,
           "loss is not finite for sample " + s.id);
    }
    out.loss += inv_b * loss;

    const auto ids = encoder.tokenize(prompt);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] == pid) {
        out.grad_embedding +=
            inv_b * g.text.row(static_cast<Eigen::Index>(k)).transpose();
      }
    }
    for (auto& [name, lg] : g.adapters) {
      auto [it, fresh] = out.grad_adapters.try_emplace(name);
      if (fresh) {
        it->second.down = inv_b * lg.down;
        it->second.up = inv_b * lg.up;
      } else {
        it->second.down += inv_b * lg.down;
        it->second.up += inv_b * lg.up;
      }
    }
    if (out.grad_frozen.empty()) out.grad_frozen = std::move(g.frozen);
  }
  if (!std::isfinite(out.loss)) {
    fail(ErrorCode::kNonFiniteLoss, "batch loss is not finite");
  }
  return out;
}

void Adam::update(const std::string& name, Eigen::Ref<Eigen::MatrixXd> param,
                  const Eigen::MatrixXd& grad) {
  if (t_ < 1) fail(ErrorCode::kInvalidArgument, "begin_step() not called");
  auto [mit, mfresh] = m_.try_emplace(name);
  auto [vit, vfresh] = v_.try_emplace(name);
  if (mfresh) mit->second = Eigen::MatrixXd::Zero(grad.rows(), grad.cols());
  if (vfresh) vit->second = Eigen::MatrixXd::Zero(grad.rows(), grad.cols());
  auto& m = mit->second;
  auto& v = vit->second;
  m = beta1_ * m + (1.0 - beta1_) * grad;
  v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  param.array() -=
      lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
}

json Adam::to_json() const {
  json j{{"lr", lr_}, {"beta1", beta1_}, {"beta2", beta2_}, {"eps", eps_},
         {"t", t_}};
  json m = json::object();
  json v = json::object();
  for (const auto& [k, x] : m_) m[k] = matrix_to_json(x);
  for (const auto& [k, x] : v_) v[k] = matrix_to_json(x);
  j["m"] = std::move(m);
  j["v"] = std::move(v);
  return j;
}

void Adam::load_json(const json& j) {
  lr_ = j.at("lr").get<double>();
  beta1_ = j.at("beta1").get<double>();
  beta2_ = j.at("beta2").get<double>();
  eps_ = j.at("eps").get<double>();
  t_ = j.at("t").get<int>();
  m_.clear();
  v_.clear();
  for (const auto& [k, x] : j.at("m").items()) m_[k] = matrix_from_json(x);
  for (const auto& [k, x] : j.at("v").items()) v_[k] = matrix_from_json(x);
}

PlaceholderToken init_placeholder(std::span<const TrainSample> subset,
                                  int steps, const ToyDenoiser& denoiser,
                                  TextEncoderClient& encoder,
                                  const diffusion::NoiseSchedule& schedule,
                                  std::uint64_t seed, double lr,
                                  std::vector<double>* losses) {
  if (subset.empty()) {
    fail(ErrorCode::kCorruptDataset, "textual-inversion subset is empty");
  }
  PlaceholderToken token = initial_placeholder(encoder);
  const AdapterMap none;
  Adam adam(lr);
  for (int step = 0; step < steps; ++step) {
    const auto sample = subset.subspan(static_cast<std::size_t>(step) % subset.size(), 1);
    Rng rng({seed, static_cast<std::uint64_t>(step), 0x71ULL});
    const auto draws = draw_step(sample, schedule, rng);
    StepResult r;
    try {
      r = training_step(sample, token, none, schedule, denoiser, encoder, draws);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNonFiniteLoss) {
        fail(ErrorCode::kDivergedLoss, e.what());
      }
      throw;
    }
    if (losses != nullptr) losses->push_back(r.loss);
    adam.begin_step();
    adam.update("v_star", token.embedding, r.grad_embedding);
    if (!token.embedding.allFinite()) {
      fail(ErrorCode::kDivergedLoss, "placeholder embedding diverged");
    }
  }
  encoder.set_embedding_row(encoder.placeholder_id(), token.embedding);
  return token;
}

std::string TrainConfig::hash() const {
  const json j{{"lr", lr},
               {"rank", rank},
               {"lora_scale", lora_scale},
               {"lora_down_std", lora_down_std},
               {"batch", batch},
               {"seed", seed},
               {"shuffle", shuffle},
               {"fixed_t", fixed_t},
               {"fixed_batch", fixed_batch}};
  return sha256_hex(j.dump()).substr(0, 16);
}

json checkpoint_to_json(const TrainCheckpoint& ckpt) {
  json adapters = json::object();
  for (const auto& [name, a] : ckpt.adapters) {
    adapters[name] = {{"scale", a.scale},
                      {"down", matrix_to_json(a.down)},
                      {"up", matrix_to_json(a.up)}};
  }
  return {{"format_version", ckpt.format_version},
          {"step", ckpt.step},
          {"config_hash", ckpt.config_hash},
          {"placeholder", ckpt.token.literal},
          {"v_star", std::vector<double>(ckpt.token.embedding.data(),
                                         ckpt.token.embedding.data() +
                                             ckpt.token.embedding.size())},
          {"adapters", adapters},
          {"optimizer", ckpt.optimizer}};
}

TrainCheckpoint checkpoint_from_json(const json& j) {
  TrainCheckpoint c;
  try {
    c.format_version = j.at("format_version").get<int>();
    if (c.format_version != 1) {
      fail(ErrorCode::kInvalidArgument,
           "unsupported checkpoint version " + std::to_string(c.format_version));
    }
    c.step = j.at("step").get<int>();
    c.config_hash = j.at("config_hash").get<std::string>();
    c.token.literal = j.value("placeholder", std::string(kPlaceholder));
    const auto v = j.at("v_star").get<std::vector<double>>();
    c.token.embedding = Eigen::Map<const Eigen::VectorXd>(
        v.data(), static_cast<Eigen::Index>(v.size()));
    for (const auto& [name, a] : j.at("adapters").items()) {
      LoraAdapter ad;
      ad.target = name;
      ad.scale = a.at("scale").get<double>();
      ad.down = matrix_from_json(a.at("down"));
      ad.up = matrix_from_json(a.at("up"));
      c.adapters.emplace(name, std::move(ad));
    }
    c.optimizer = j.at("optimizer");
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

FileCheckpointSink::FileCheckpointSink(std::filesystem::path dir)
    : dir_(std::move(dir)) {}

void FileCheckpointSink::write(const TrainCheckpoint& ckpt) {
  const std::string text = checkpoint_to_json(ckpt).dump();
  char name[64];
  std::snprintf(name, sizeof name, "checkpoint-%06d.json", ckpt.step);
  try {
    std::filesystem::create_directories(dir_);
    for (const auto& target : {dir_ / name, dir_ / "latest.json"}) {
      auto tmp = target;
      tmp += ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
      }
      std::filesystem::rename(tmp, target);
    }
  } catch (const std::exception& e) {
    fail(ErrorCode::kCheckpointWriteFailure, e.what());
  }
}

TrainCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const auto j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded()) {
    fail(ErrorCode::kInvalidArgument, "checkpoint is not JSON: " + path.string());
  }
  return checkpoint_from_json(j);
}

std::vector<std::size_t> batch_indices(const TrainConfig& config,
                                       std::size_t dataset_size, int step) {
  const std::size_t b = static_cast<std::size_t>(std::max(config.batch, 1));
  const std::size_t per_epoch = (dataset_size + b - 1) / b;
  const std::size_t epoch = static_cast<std::size_t>(step) / per_epoch;
  const std::size_t pos = static_cast<std::size_t>(step) % per_epoch;
  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config.shuffle) {
    Rng rng({config.seed, epoch, 0x5EEDULL});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.index(i)]);
    }
  }
  const auto first = order.begin() + static_cast<std::ptrdiff_t>(pos * b);
  const auto last = order.begin() + static_cast<std::ptrdiff_t>(
                                        std::min(dataset_size, pos * b + b));
  return {first, last};
}

TrainResult train(const TrainConfig& config,
                  std::span<const TrainSample> dataset,
                  const ToyDenoiser& denoiser, TextEncoderClient& encoder,
                  const diffusion::NoiseSchedule& schedule,
                  CheckpointSink* sink, const TrainCheckpoint* resume,
                  const LossTelemetry& telemetry,
                  const PlaceholderToken* initial_token) {
  if (dataset.empty()) fail(ErrorCode::kCorruptDataset, "dataset is empty");
  for (const auto& s : dataset) check_sample(s);
  if (!(config.lr > 0.0) || config.steps < 0 || config.batch < 1 ||
      config.rank < 1) {
    fail(ErrorCode::kInvalidArgument, "invalid training configuration");
  }
  if (config.fixed_t < 0 || config.fixed_t > schedule.steps) {
    fail(ErrorCode::kInvalidArgument, "fixed_t outside the schedule");
  }

  TrainResult result;
  Adam adam(config.lr);
  int start = 0;
  if (resume != nullptr) {
    if (resume->config_hash != config.hash()) {
      fail(ErrorCode::kInvalidArgument,
           "checkpoint was written with a different configuration");
    }
    result.token = resume->token;
    result.adapters = resume->adapters;
    adam.load_json(resume->optimizer);
    start = resume->step;
  } else {
    result.token = initial_token != nullptr ? *initial_token
                                            : initial_placeholder(encoder);
    Rng rng({config.seed, 0xADA9ULL});
    result.adapters = denoiser.make_adapters(config.rank, config.lora_scale,
                                             config.lora_down_std, rng);
  }

  std::vector<TrainSample> batch;
  for (int step = start; step < config.steps; ++step) {
    const int draw_step_index = config.fixed_batch ? 0 : step;
    batch.clear();
    for (auto i : batch_indices(config, dataset.size(), draw_step_index)) {
      batch.push_back(dataset[i]);
    }
    Rng rng({config.seed, static_cast<std::uint64_t>(draw_step_index)});
    auto draws = draw_step(batch, schedule, rng);
    if (config.fixed_t > 0) {
      for (auto& d : draws) d.t = config.fixed_t;
    }
    const StepResult r = training_step(batch, result.token, result.adapters,
                                       schedule, denoiser, encoder, draws);
    adam.begin_step();
    if (result.token.trainable) {
      adam.update("v_star", result.token.embedding, r.grad_embedding);
    }
    for (auto& [name, adapter] : result.adapters) {
      const auto& g = r.grad_adapters.at(name);
      adam.update(name + ".down", adapter.down, g.down);
      adam.update(name + ".up", adapter.up, g.up);
    }
    result.losses.push_back(r.loss);
    result.final_step = step + 1;
    if (telemetry) telemetry(step + 1, r.loss);
    if (sink != nullptr && config.checkpoint_every > 0 &&
        (step + 1) % config.checkpoint_every == 0) {
      sink->write({1, step + 1, config.hash(), result.token, result.adapters,
                   adam.to_json()});
    }
  }
  if (resume != nullptr && start >= config.steps) result.final_step = start;
  encoder.set_embedding_row(encoder.placeholder_id(), result.token.embedding);
  return result;
}

}  // namespace erasekit::tuning
