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

#include <string>

#include <Eigen/Dense>

#include "erasekit/common/rng.hpp"

namespace erasekit::tuning {

// Low-rank additive update scale * up * down on a frozen weight matrix.
struct LoraAdapter {
  std::string target;    // layer id, e.g. "self.q"
  Eigen::MatrixXd down;  // rank x d_in
  Eigen::MatrixXd up;    // d_out x rank
  double scale = 1.0;

  int rank() const { return static_cast<int>(down.rows()); }
  Eigen::Index parameter_count() const { return down.size() + up.size(); }
  Eigen::MatrixXd delta() const { return scale * (up * down); }
};

// `up` starts at zero so the adapted layer initially reproduces the base
// layer exactly; `down` is drawn from N(0, down_std^2).
LoraAdapter make_lora(std::string target, Eigen::Index d_out, Eigen::Index d_in,
                      int rank, double scale, double down_std, Rng& rng);

// base + scale * up * down. Throws kShapeMismatch on incompatible shapes.
Eigen::MatrixXd apply_lora(const Eigen::MatrixXd& base,
                           const LoraAdapter& adapter);

}  // namespace erasekit::tuning
