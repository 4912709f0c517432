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

#pragma once

#include <map>
#include <utility>

#include <Eigen/Dense>

#include "erasekit/diffusion/sampler.hpp"
#include "erasekit/refocus/label_map.hpp"

namespace erasekit::refocus {

struct RefocusConfig {
  double lambda_pos = 0.8;
  double lambda_neg = 1.0;
  double window_lo = 0.7;
  double window_hi = 1.0;
  bool enabled = true;

  // Throws kInvalidArgument unless 0 <= lambda_pos <= 1, lambda_neg >= 0 and
  // 0 <= window_lo < window_hi <= 1.
  void validate() const;
};

// Binary query x key masks selecting which logits are boosted (pos) and
// suppressed (neg).
struct PairMasks {
  Eigen::MatrixXd pos;
  Eigen::MatrixXd neg;
};

struct ModulationWeights {
  Eigen::MatrixXd pos;  // (1 - lambda_pos) * S_min + lambda_pos * S_max
  Eigen::MatrixXd neg;  // lambda_neg * S_max
};

struct AttentionModulation {
  Eigen::MatrixXd mask_pos;
  Eigen::MatrixXd mask_neg;
  Eigen::MatrixXd w_pos;
  Eigen::MatrixXd w_neg;
  Eigen::MatrixXd m;  // w_pos . mask_pos - w_neg . mask_neg
};

// Case tables for one (query, key) label pair.
bool pair_positive(Label query, Label key);
bool pair_negative(Label query, Label key);

PairMasks build_pair_masks(const LabelMap& map);

// Row-wise max/min of the raw similarity matrix, replicated along keys.
ModulationWeights modulation_weights(const Eigen::MatrixXd& scores,
                                     const RefocusConfig& cfg);

AttentionModulation make_modulation(PairMasks masks, ModulationWeights weights);

// Row-wise softmax((q k^T + M) / sqrt(d)).
Eigen::MatrixXd refocused_attention(const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& k,
                                    const Eigen::MatrixXd& m, int d);
Eigen::MatrixXd refocused_attention(const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& k,
                                    const AttentionModulation& mod, int d);

// Closed interval [window_lo, window_hi].
bool window_active(double t_normalized, const RefocusConfig& cfg);

// Self-attention hook that recomputes M from the current raw scores at
// every admitted step and layer. Pair masks are cached per grid size.
class RefocusHook final : public diffusion::SelfAttentionHook {
 public:
  RefocusHook(LabelMap full_resolution, RefocusConfig cfg);

  bool active(double t_normalized) const override;
  std::optional<Eigen::MatrixXd> modulation(
      const diffusion::AttentionSite& site,
      const Eigen::MatrixXd& raw_scores) override;

  int invocations() const noexcept { return invocations_; }

 private:
  const LabelMap& grid(int height, int width);

  LabelMap source_;
  RefocusConfig cfg_;
  std::map<std::pair<int, int>, LabelMap> grids_;
  int invocations_ = 0;
};

}  // namespace erasekit::refocus
