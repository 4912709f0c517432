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

#include "erasekit/refocus/modulation.hpp"

#include <cmath>
#include <string>

namespace erasekit::refocus {

void RefocusConfig::validate() const {
  if (!(lambda_pos >= 0.0 && lambda_pos <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "lambda_pos must lie in [0, 1]");
  }
  if (!(lambda_neg >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "lambda_neg must be >= 0");
  }
  if (!(window_lo >= 0.0 && window_lo < window_hi && window_hi <= 1.0)) {
    fail(ErrorCode::kInvalidArgument,
         "window must satisfy 0 <= lo < hi <= 1");
  }
}

bool pair_positive(Label query, Label key) {
  return (query == Label::kMask && key == Label::kPositive) ||
         (query == Label::kPositive &&
          (key == Label::kMask || key == Label::kPositive));
}

bool pair_negative(Label query, Label key) {
  return (query == Label::kMask &&
          (key == Label::kMask || key == Label::kNegative)) ||
         (query == Label::kNegative && key == Label::kMask);
}

PairMasks build_pair_masks(const LabelMap& map) {
  const auto n = static_cast<Eigen::Index>(map.size());
  PairMasks out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Label li = map.labels[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      const Label lj = map.labels[j];
      if (pair_positive(li, lj)) out.pos(i, j) = 1.0;
      if (pair_negative(li, lj)) out.neg(i, j) = 1.0;
    }
  }
  return out;
}

ModulationWeights modulation_weights(const Eigen::MatrixXd& scores,
                                     const RefocusConfig& cfg) {
  const Eigen::VectorXd s_max = scores.rowwise().maxCoeff();
  const Eigen::VectorXd s_min = scores.rowwise().minCoeff();
  const Eigen::VectorXd pos =
      (1.0 - cfg.lambda_pos) * s_min + cfg.lambda_pos * s_max;
  const Eigen::VectorXd neg = cfg.lambda_neg * s_max;
  const auto cols = scores.cols();
  return {pos.replicate(1, cols), neg.replicate(1, cols)};
}

AttentionModulation make_modulation(PairMasks masks, ModulationWeights weights) {
  AttentionModulation mod;
  mod.m = weights.pos.cwiseProduct(masks.pos) - weights.neg.cwiseProduct(masks.neg);
  mod.mask_pos = std::move(masks.pos);
  mod.mask_neg = std::move(masks.neg);
  mod.w_pos = std::move(weights.pos);
  mod.w_neg = std::move(weights.neg);
  return mod;
}

Eigen::MatrixXd refocused_attention(const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& k,
                                    const Eigen::MatrixXd& m, int d) {
  if (d < 1) fail(ErrorCode::kInvalidArgument, "d must be >= 1");
  if (q.cols() != k.cols() || m.rows() != q.rows() || m.cols() != k.rows()) {
    fail(ErrorCode::kShapeMismatch, "q, k and M dimensions disagree");
  }
  Eigen::MatrixXd logits = (q * k.transpose() + m) / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return logits;
}

Eigen::MatrixXd refocused_attention(const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& k,
                                    const AttentionModulation& mod, int d) {
  return refocused_attention(q, k, mod.m, d);
}

bool window_active(double t_normalized, const RefocusConfig& cfg) {
  return t_normalized >= cfg.window_lo && t_normalized <= cfg.window_hi;
}

RefocusHook::RefocusHook(LabelMap full_resolution, RefocusConfig cfg)
    : source_(std::move(full_resolution)), cfg_(cfg) {
  cfg_.validate();
}

bool RefocusHook::active(double t_normalized) const {
  return cfg_.enabled && window_active(t_normalized, cfg_);
}

const LabelMap& RefocusHook::grid(int height, int width) {
  const auto key = std::make_pair(height, width);
  auto it = grids_.find(key);
  if (it == grids_.end()) {
    it = grids_.emplace(key, downsample_label_map(source_, height, width)).first;
  }
  return it->second;
}

std::optional<Eigen::MatrixXd> RefocusHook::modulation(
    const diffusion::AttentionSite& site, const Eigen::MatrixXd& raw_scores) {
  if (!active(site.t_normalized)) return std::nullopt;
  const LabelMap& labels = grid(site.grid_height, site.grid_width);
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (raw_scores.rows() != n || raw_scores.cols() != n) {
    fail(ErrorCode::kShapeMismatch,
         "scores " + std::to_string(raw_scores.rows()) + "x" +
             std::to_string(raw_scores.cols()) + " for a grid of " +
             std::to_string(n) + " tokens");
  }
  ++invocations_;
  // Row-replicated weights let M be filled without materialising the four
  // N x N intermediates.
  const Eigen::VectorXd s_max = raw_scores.rowwise().maxCoeff();
  const Eigen::VectorXd s_min = raw_scores.rowwise().minCoeff();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w_pos = (1.0 - cfg_.lambda_pos) * s_min(i) + cfg_.lambda_pos * s_max(i);
    const double w_neg = cfg_.lambda_neg * s_max(i);
    const Label li = labels.labels[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      const Label lj = labels.labels[j];
      double v = 0.0;
      if (pair_positive(li, lj)) v += w_pos;
      if (pair_negative(li, lj)) v -= w_neg;
      m(i, j) = v;
    }
  }
  return m;
}

}  // namespace erasekit::refocus
