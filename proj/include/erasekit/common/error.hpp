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

#include <stdexcept>
#include <string>
#include <string_view>

namespace erasekit {

enum class ErrorCode {
  kInvalidSchedule,
  kShapeMismatch,
  kInvalidStrength,
  kInvalidArgument,
  kInpainterUnavailable,
  kEncodeFailure,
  kDecodeFailure,
  kDenoiserFailure,
  kCoverageGap,
  kInvalidTarget,
  kNoBackgroundTag,
  kDivergedLoss,
  kNonFiniteLoss,
  kCorruptDataset,
  kCheckpointWriteFailure,
  kNoErasableObject,
  kPlacementNotFound,
  kVlmUnavailable,
  kIoFailure,
  kDegenerateImage,
  kExtractorUnavailable,
  kMissingPair,
  kEmptyMask,
  kOversizeInput,
  kNotFound,
  kQueueFull,
  kSegmenterUnavailable,
  kRestartInterrupted,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type. `code()` is the
// machine-readable kind, `what()` carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace erasekit
