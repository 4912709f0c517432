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

#include "erasekit/common/error.hpp"

namespace erasekit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSchedule: return "InvalidSchedule";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidStrength: return "InvalidStrength";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInpainterUnavailable: return "InpainterUnavailable";
    case ErrorCode::kEncodeFailure: return "EncodeFailure";
    case ErrorCode::kDecodeFailure: return "DecodeFailure";
    case ErrorCode::kDenoiserFailure: return "DenoiserFailure";
    case ErrorCode::kCoverageGap: return "CoverageGap";
    case ErrorCode::kInvalidTarget: return "InvalidTarget";
    case ErrorCode::kNoBackgroundTag: return "NoBackgroundTag";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kCorruptDataset: return "CorruptDataset";
    case ErrorCode::kCheckpointWriteFailure: return "CheckpointWriteFailure";
    case ErrorCode::kNoErasableObject: return "NoErasableObject";
    case ErrorCode::kPlacementNotFound: return "PlacementNotFound";
    case ErrorCode::kVlmUnavailable: return "VlmUnavailable";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kDegenerateImage: return "DegenerateImage";
    case ErrorCode::kExtractorUnavailable: return "ExtractorUnavailable";
    case ErrorCode::kMissingPair: return "MissingPair";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kOversizeInput: return "OversizeInput";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kQueueFull: return "QueueFull";
    case ErrorCode::kSegmenterUnavailable: return "SegmenterUnavailable";
    case ErrorCode::kRestartInterrupted: return "RestartInterrupted";
  }
  return "Unknown";
}

}  // namespace erasekit
