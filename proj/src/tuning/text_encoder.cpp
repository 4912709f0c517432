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

#include "erasekit/tuning/text_encoder.hpp"

#include <cctype>
#include <cmath>

#include "erasekit/common/error.hpp"
#include "erasekit/common/rng.hpp"
#include "erasekit/tuning/prompt.hpp"

namespace erasekit::tuning {

ToyTextEncoder::ToyTextEncoder(int width, unsigned long long seed)
    : width_(width),
      table_(kBuckets + 2, width),
      position_(kMaxTokens, width) {
  if (width < 2) fail(ErrorCode::kInvalidArgument, "text width must be >= 2");
  Rng rng(seed);
  for (Eigen::Index i = 0; i < table_.size(); ++i) {
    table_.data()[i] = rng.normal();
  }
  for (int p = 0; p < kMaxTokens; ++p) {
    for (int i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i / 2 * 2) / width);
      position_(p, i) = 0.1 * (i % 2 == 0 ? std::sin(p * freq) : std::cos(p * freq));
    }
  }
}

int ToyTextEncoder::token_id(std::string_view word) const {
  if (word == kPlaceholder) return placeholder_id();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : word) {
    h ^= static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(c)));
    h *= 1099511628211ULL;
  }
  return static_cast<int>(h % kBuckets);
}

std::vector<int> ToyTextEncoder::tokenize(std::string_view prompt) const {
  std::vector<int> ids{begin_id()};
  std::string word;
  auto flush = [&] {
    if (!word.empty()) ids.push_back(token_id(word));
    word.clear();
  };
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    if (prompt.substr(i, kPlaceholder.size()) == kPlaceholder) {
      flush();
      ids.push_back(placeholder_id());
      i += kPlaceholder.size() - 1;
      continue;
    }
    const auto c = static_cast<unsigned char>(prompt[i]);
    if (std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  if (ids.size() > static_cast<std::size_t>(kMaxTokens)) ids.resize(kMaxTokens);
  return ids;
}

Eigen::MatrixXd ToyTextEncoder::encode(std::string_view prompt) const {
  const auto ids = tokenize(prompt);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), width_);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) =
        table_.row(ids[k]) + position_.row(static_cast<Eigen::Index>(k));
  }
  return out;
}

void ToyTextEncoder::set_embedding_row(int token_id, const Eigen::VectorXd& row) {
  if (token_id < 0 || token_id >= table_.rows() || row.size() != width_) {
    fail(ErrorCode::kShapeMismatch, "embedding row does not fit the table");
  }
  table_.row(token_id) = row.transpose();
}

}  // namespace erasekit::tuning
