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

#include "erasekit/tuning/toy_denoiser.hpp"

#include <cmath>

#include "erasekit/common/error.hpp"
#include "erasekit/common/rng.hpp"
#include "erasekit/diffusion/conditioning.hpp"

namespace erasekit::tuning {
namespace {

using Eigen::MatrixXd;
using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kTimeFeatures = 16;

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double std, Rng& rng) {
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * rng.normal();
  return m;
}

MatrixXd silu(const MatrixXd& x) {
  return x.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
}

MatrixXd silu_slope(const MatrixXd& x) {
  return x.unaryExpr([](double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return s * (1.0 + v * (1.0 - s));
  });
}

// Zero-padded 3x3 convolution of an (h*w) x c token matrix. Weight columns
// are ordered tap-major (ky, kx), then input channel.
MatrixXd conv3x3(const MatrixXd& x, int h, int w, const MatrixXd& weight) {
  const auto c = x.cols();
  MatrixXd cols = MatrixXd::Zero(static_cast<Eigen::Index>(h) * w, 9 * c);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const Eigen::Index row = static_cast<Eigen::Index>(y) * w + xx;
      for (int ky = -1; ky <= 1; ++ky) {
        for (int kx = -1; kx <= 1; ++kx) {
          const int sy = y + ky;
          const int sx = xx + kx;
          if (sy < 0 || sx < 0 || sy >= h || sx >= w) continue;
          const Eigen::Index tap = (ky + 1) * 3 + (kx + 1);
          cols.block(row, tap * c, 1, c) =
              x.row(static_cast<Eigen::Index>(sy) * w + sx);
        }
      }
    }
  }
  return cols * weight.transpose();
}

MatrixXd avgpool2(const MatrixXd& x, int h, int w) {
  const int h2 = h / 2;
  const int w2 = w / 2;
  MatrixXd out(static_cast<Eigen::Index>(h2) * w2, x.cols());
  for (int y = 0; y < h2; ++y) {
    for (int xx = 0; xx < w2; ++xx) {
      const auto at = [&](int dy, int dx) {
        return x.row(static_cast<Eigen::Index>(2 * y + dy) * w + 2 * xx + dx);
      };
      out.row(static_cast<Eigen::Index>(y) * w2 + xx) =
          0.25 * (at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1));
    }
  }
  return out;
}

MatrixXd upsample2(const MatrixXd& x, int h, int w) {
  MatrixXd out(static_cast<Eigen::Index>(h) * w, x.cols());
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      out.row(static_cast<Eigen::Index>(y) * w + xx) =
          x.row(static_cast<Eigen::Index>(y / 2) * (w / 2) + xx / 2);
    }
  }
  return out;
}

Eigen::VectorXd time_features(int timestep) {
  Eigen::VectorXd f(kTimeFeatures);
  const int half = kTimeFeatures / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    f(i) = std::sin(timestep * freq);
    f(half + i) = std::cos(timestep * freq);
  }
  return f;
}

// Row softmax with max subtraction.
MatrixXd softmax_rows(const MatrixXd& logits) {
  MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - top).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

// Backward through softmax(logits) given d(attention).
MatrixXd softmax_backward(const MatrixXd& a, const MatrixXd& da) {
  const Eigen::VectorXd dot = (da.array() * a.array()).rowwise().sum();
  return a.array() * (da.colwise() - dot).array();
}

RowMajor to_tokens(const Latent& x) {
  return Eigen::Map<const RowMajor>(x.data(),
                                    static_cast<Eigen::Index>(x.pixels()),
                                    x.channels());
}

}  // namespace

struct ToyDenoiser::Tape {
  MatrixXd x0;
  MatrixXd q, k, v, o;
  std::vector<MatrixXd> a;
  MatrixXd x1;
  MatrixXd qc, kc, vc, oc;
  std::vector<MatrixXd> ac;
  MatrixXd x2;
  MatrixXd y;
  std::map<std::string, MatrixXd> w;
};

ToyDenoiser::ToyDenoiser(ToyDenoiserConfig cfg) : cfg_(cfg) {
  const int c = cfg_.channels;
  const int d = cfg_.text_width;
  if (c < 1 || d < 1 || cfg_.heads < 1 || c % cfg_.heads != 0) {
    fail(ErrorCode::kInvalidArgument,
         "channels must be a positive multiple of heads");
  }
  const int in = diffusion::kUnetInputChannels;
  Rng rng(cfg_.seed);
  const auto fan = [](int n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  weights_["conv.in"] = gaussian(c, 9 * in, fan(9 * in), rng);
  weights_["conv.down"] = gaussian(c, 9 * c, fan(9 * c), rng);
  weights_["conv.up"] = gaussian(c, 18 * c, fan(18 * c), rng);
  weights_["conv.skip"] = gaussian(c, in, fan(in), rng);
  weights_["time"] = gaussian(c, kTimeFeatures, 0.25, rng);
  for (const char* n : {"self.q", "self.k", "self.v", "self.o", "cross.q"}) {
    weights_[n] = gaussian(c, c, fan(c), rng);
  }
  weights_["cross.k"] = gaussian(c, d, fan(d), rng);
  weights_["cross.v"] = gaussian(c, d, fan(d), rng);
  weights_["cross.o"] = gaussian(c, c, fan(c), rng);
  weights_["head"] = gaussian(diffusion::kLatentChannels, c, fan(c), rng);
}

const std::vector<std::string>& ToyDenoiser::adapter_targets() {
  static const std::vector<std::string> targets{
      "self.q",  "self.k",  "self.v",  "self.o",
      "cross.q", "cross.k", "cross.v", "cross.o"};
  return targets;
}

AdapterMap ToyDenoiser::make_adapters(int rank, double scale, double down_std,
                                      Rng& rng) const {
  AdapterMap out;
  for (const auto& name : adapter_targets()) {
    const auto& base = weights_.at(name);
    out.emplace(name, make_lora(name, base.rows(), base.cols(), rank, scale,
                                down_std, rng));
  }
  return out;
}

MatrixXd ToyDenoiser::effective(const std::string& name,
                                const AdapterMap* adapters) const {
  const auto& base = weights_.at(name);
  if (adapters == nullptr) return base;
  const auto it = adapters->find(name);
  if (it == adapters->end()) return base;
  return apply_lora(base, it->second);
}

MatrixXd ToyDenoiser::trunk(const Latent& x, int timestep) const {
  const int h = x.height();
  const int w = x.width();
  const MatrixXd tokens = to_tokens(x);
  const MatrixXd e1 = silu(conv3x3(tokens, h, w, weights_.at("conv.in")));
  const MatrixXd e2 =
      silu(conv3x3(avgpool2(e1, h, w), h / 2, w / 2, weights_.at("conv.down")));
  MatrixXd cat(e1.rows(), 2 * e1.cols());
  cat << upsample2(e2, h, w), e1;
  MatrixXd out = conv3x3(cat, h, w, weights_.at("conv.up"));
  out += tokens * weights_.at("conv.skip").transpose();
  const Eigen::RowVectorXd temb =
      (weights_.at("time") * time_features(timestep)).transpose();
  out.rowwise() += temb;
  return out;
}

MatrixXd ToyDenoiser::forward(const Latent& x, int timestep,
                              const MatrixXd& text, const AdapterMap* adapters,
                              diffusion::SelfAttentionHook* hook,
                              double t_normalized, Tape* tape) const {
  if (x.channels() != diffusion::kUnetInputChannels) {
    fail(ErrorCode::kShapeMismatch,
         "expected a 9-channel input, got " + x.shape_string());
  }
  if (x.height() < 2 || x.width() < 2 || x.height() % 2 != 0 ||
      x.width() % 2 != 0) {
    fail(ErrorCode::kShapeMismatch,
         "grid must have even sides, got " + x.shape_string());
  }
  if (text.cols() != cfg_.text_width || text.rows() < 1) {
    fail(ErrorCode::kShapeMismatch, "text conditioning width mismatch");
  }
  const int heads = cfg_.heads;
  const int hd = cfg_.channels / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(hd));

  Tape local;
  Tape& tp = tape != nullptr ? *tape : local;
  for (const auto& n : adapter_targets()) tp.w[n] = effective(n, adapters);

  tp.x0 = trunk(x, timestep);

  // Self-attention.
  tp.q = tp.x0 * tp.w["self.q"].transpose();
  tp.k = tp.x0 * tp.w["self.k"].transpose();
  tp.v = tp.x0 * tp.w["self.v"].transpose();
  std::vector<MatrixXd> raw(heads);
  for (int h = 0; h < heads; ++h) {
    raw[h] = tp.q.middleCols(h * hd, hd) * tp.k.middleCols(h * hd, hd).transpose();
  }
  std::optional<MatrixXd> m;
  if (hook != nullptr) {
    MatrixXd mean = raw[0];
    for (int h = 1; h < heads; ++h) mean += raw[h];
    mean /= heads;
    m = hook->modulation({0, x.height(), x.width(), t_normalized}, mean);
    if (m && (m->rows() != mean.rows() || m->cols() != mean.cols())) {
      fail(ErrorCode::kShapeMismatch, "hook returned a mis-sized modulation");
    }
  }
  tp.a.assign(heads, MatrixXd());
  tp.o.resize(tp.x0.rows(), cfg_.channels);
  for (int h = 0; h < heads; ++h) {
    if (m) raw[h] += *m;
    tp.a[h] = softmax_rows(raw[h] * inv);
    tp.o.middleCols(h * hd, hd) = tp.a[h] * tp.v.middleCols(h * hd, hd);
  }
  tp.x1 = tp.x0 + tp.o * tp.w["self.o"].transpose();

  // Cross-attention to the text rows.
  tp.qc = tp.x1 * tp.w["cross.q"].transpose();
  tp.kc = text * tp.w["cross.k"].transpose();
  tp.vc = text * tp.w["cross.v"].transpose();
  tp.ac.assign(heads, MatrixXd());
  tp.oc.resize(tp.x1.rows(), cfg_.channels);
  for (int h = 0; h < heads; ++h) {
    tp.ac[h] = softmax_rows(tp.qc.middleCols(h * hd, hd) *
                            tp.kc.middleCols(h * hd, hd).transpose() * inv);
    tp.oc.middleCols(h * hd, hd) = tp.ac[h] * tp.vc.middleCols(h * hd, hd);
  }
  tp.x2 = tp.x1 + tp.oc * tp.w["cross.o"].transpose();

  tp.y = silu(tp.x2) * weights_.at("head").transpose();
  return tp.y;
}

Latent ToyDenoiser::predict(const Latent& unet_input, int timestep,
                            const MatrixXd& text, const AdapterMap* adapters,
                            diffusion::SelfAttentionHook* hook,
                            double t_normalized) const {
  const MatrixXd y = forward(unet_input, timestep, text, adapters, hook,
                             t_normalized, nullptr);
  Latent out(unet_input.height(), unet_input.width(),
             diffusion::kLatentChannels);
  Eigen::Map<RowMajor>(out.data(), y.rows(), y.cols()) = y;
  return out;
}

diffusion::NoisePredictor ToyDenoiser::predictor(
    const AdapterMap* adapters) const {
  return [this, adapters](const Latent& x9, int timestep, const MatrixXd& text,
                          diffusion::SelfAttentionHook* hook, double t_norm) {
    return predict(x9, timestep, text, adapters, hook, t_norm);
  };
}

double ToyDenoiser::loss_and_grad(const Latent& unet_input, int timestep,
                                  const MatrixXd& text, const Latent& target,
                                  const AdapterMap& adapters,
                                  ToyGradients* grad) const {
  if (target.height() != unet_input.height() ||
      target.width() != unet_input.width() ||
      target.channels() != diffusion::kLatentChannels) {
    fail(ErrorCode::kShapeMismatch, "target must be h x w x 4");
  }
  Tape tp;
  forward(unet_input, timestep, text, &adapters, nullptr, 1.0, &tp);
  const MatrixXd diff = tp.y - to_tokens(target);
  const double count = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / count;
  if (grad == nullptr) return loss;

  const int heads = cfg_.heads;
  const int hd = cfg_.channels / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(hd));
  std::map<std::string, MatrixXd> dw;

  // Output head.
  const MatrixXd dy = (2.0 / count) * diff;
  const MatrixXd dx2 =
      (dy * weights_.at("head")).cwiseProduct(silu_slope(tp.x2));

  // Cross-attention.
  dw["cross.o"] = dx2.transpose() * tp.oc;
  const MatrixXd doc = dx2 * tp.w["cross.o"];
  MatrixXd dqc(tp.qc.rows(), tp.qc.cols());
  MatrixXd dkc(tp.kc.rows(), tp.kc.cols());
  MatrixXd dvc(tp.vc.rows(), tp.vc.cols());
  for (int h = 0; h < heads; ++h) {
    const auto doh = doc.middleCols(h * hd, hd);
    const MatrixXd da = doh * tp.vc.middleCols(h * hd, hd).transpose();
    dvc.middleCols(h * hd, hd) = tp.ac[h].transpose() * doh;
    const MatrixXd ds = softmax_backward(tp.ac[h], da) * inv;
    dqc.middleCols(h * hd, hd) = ds * tp.kc.middleCols(h * hd, hd);
    dkc.middleCols(h * hd, hd) = ds.transpose() * tp.qc.middleCols(h * hd, hd);
  }
  dw["cross.q"] = dqc.transpose() * tp.x1;
  dw["cross.k"] = dkc.transpose() * text;
  dw["cross.v"] = dvc.transpose() * text;
  grad->text = dkc * tp.w["cross.k"] + dvc * tp.w["cross.v"];
  const MatrixXd dx1 = dx2 + dqc * tp.w["cross.q"];

  // Self-attention; x0 does not depend on trainable parameters.
  dw["self.o"] = dx1.transpose() * tp.o;
  const MatrixXd dout = dx1 * tp.w["self.o"];
  MatrixXd dq(tp.q.rows(), tp.q.cols());
  MatrixXd dk(tp.k.rows(), tp.k.cols());
  MatrixXd dv(tp.v.rows(), tp.v.cols());
  for (int h = 0; h < heads; ++h) {
    const auto doh = dout.middleCols(h * hd, hd);
    const MatrixXd da = doh * tp.v.middleCols(h * hd, hd).transpose();
    dv.middleCols(h * hd, hd) = tp.a[h].transpose() * doh;
    const MatrixXd ds = softmax_backward(tp.a[h], da) * inv;
    dq.middleCols(h * hd, hd) = ds * tp.k.middleCols(h * hd, hd);
    dk.middleCols(h * hd, hd) = ds.transpose() * tp.q.middleCols(h * hd, hd);
  }
  dw["self.q"] = dq.transpose() * tp.x0;
  dw["self.k"] = dk.transpose() * tp.x0;
  dw["self.v"] = dv.transpose() * tp.x0;

  grad->adapters.clear();
  for (const auto& [name, adapter] : adapters) {
    const auto it = dw.find(name);
    if (it == dw.end()) continue;
    grad->adapters[name] = {adapter.scale * adapter.up.transpose() * it->second,
                            adapter.scale * it->second *
                                adapter.down.transpose()};
  }
  grad->frozen.clear();
  for (const auto& [name, w] : weights_) {
    grad->frozen[name] = MatrixXd::Zero(w.rows(), w.cols());
  }
  return loss;
}

}  // namespace erasekit::tuning
