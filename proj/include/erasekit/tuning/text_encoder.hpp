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
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace erasekit::tuning {

// Maps a prompt to conditioning vectors. The embedding table is exposed so
// the placeholder row can be replaced by a learned vector; encoding must be
// linear in the table rows so gradients can be routed back to them.
class TextEncoderClient {
 public:
  virtual ~TextEncoderClient() = default;

  virtual int width() const = 0;
  virtual std::vector<int> tokenize(std::string_view prompt) const = 0;
  // tokens x width conditioning for `prompt`.
  virtual Eigen::MatrixXd encode(std::string_view prompt) const = 0;

  virtual const Eigen::MatrixXd& embedding_table() const = 0;
  virtual void set_embedding_row(int token_id, const Eigen::VectorXd& row) = 0;
  virtual int placeholder_id() const = 0;
  virtual int token_id(std::string_view word) const = 0;
};

// Hash-bucket vocabulary with seeded Gaussian embeddings and a fixed
// sinusoidal position code. Words are lower-cased and split on anything
// that is not alphanumeric; the placeholder "R_*" is a single token with a
// reserved row. A begin-of-text token is always prepended.
class ToyTextEncoder final : public TextEncoderClient {
 public:
  static constexpr int kBuckets = 256;
  static constexpr int kMaxTokens = 16;

  explicit ToyTextEncoder(int width = 32, unsigned long long seed = 7);

  int width() const override { return width_; }
  std::vector<int> tokenize(std::string_view prompt) const override;
  Eigen::MatrixXd encode(std::string_view prompt) const override;

  const Eigen::MatrixXd& embedding_table() const override { return table_; }
  void set_embedding_row(int token_id, const Eigen::VectorXd& row) override;
  int placeholder_id() const override { return kBuckets + 1; }
  int begin_id() const { return kBuckets; }
  int token_id(std::string_view word) const override;

 private:
  int width_;
  Eigen::MatrixXd table_;     // (kBuckets + 2) x width
  Eigen::MatrixXd position_;  // kMaxTokens x width
};

}  // namespace erasekit::tuning
