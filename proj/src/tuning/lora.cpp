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

#include "erasekit/tuning/lora.hpp"

#include "erasekit/common/error.hpp"

namespace erasekit::tuning {

LoraAdapter make_lora(std::string target, Eigen::Index d_out, Eigen::Index d_in,
                      int rank, double scale, double down_std, Rng& rng) {
  if (rank < 1) fail(ErrorCode::kInvalidArgument, "LoRA rank must be >= 1");
  LoraAdapter a;
  a.target = std::move(target);
  a.scale = scale;
  a.down.resize(rank, d_in);
  for (Eigen::Index i = 0; i < a.down.size(); ++i) {
    a.down.data()[i] = down_std * rng.normal();
  }
  a.up = Eigen::MatrixXd::Zero(d_out, rank);
  return a;
}

Eigen::MatrixXd apply_lora(const Eigen::MatrixXd& base,
                           const LoraAdapter& adapter) {
  if (adapter.up.cols() != adapter.down.rows() ||
      adapter.up.rows() != base.rows() || adapter.down.cols() != base.cols()) {
    fail(ErrorCode::kShapeMismatch,
         "adapter " + adapter.target + " does not fit a " +
             std::to_string(base.rows()) + "x" + std::to_string(base.cols()) +
             " weight");
  }
  return base + adapter.scale * (adapter.up * adapter.down);
}

}  // namespace erasekit::tuning
