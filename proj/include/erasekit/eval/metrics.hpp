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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "erasekit/common/array3.hpp"

namespace erasekit::eval {

inline constexpr int kEvalSide = 512;
inline constexpr double kPsnrCap = 100.0;

// Bilinear resize (half-pixel centers) so the long side is 512, then zero
// padding of the short side. The top/left pad is floor(total / 2); the odd
// line goes to the bottom/right. Throws kDegenerateImage on an empty image.
Image resize_pad_512(const Image& image);

// Bilinear resize with half-pixel centers, rounded to nearest.
Image resize_bilinear(const Image& image, int height, int width);

// 10 log10(255^2 / MSE) over all channels, capped at 100 dB.
double psnr(const Image& a, const Image& b);

// BT.601 luma as doubles.
Eigen::MatrixXd luma(const Image& image);

// Mean SSIM on luma with an 11x11 Gaussian window (sigma 1.5) over valid
// window positions; C1 = (0.01 * 255)^2, C2 = (0.03 * 255)^2. Both sides
// must be at least 11 pixels.
double ssim(const Image& a, const Image& b);

// Normalized 11x11 Gaussian window.
Eigen::MatrixXd gaussian_window(int size = 11, double sigma = 1.5);

// Perceptual backend for LPIPS and FID.
class FeatureExtractorClient {
 public:
  virtual ~FeatureExtractorClient() = default;
  virtual std::string id() const = 0;
  // One feature row per image.
  virtual Eigen::MatrixXd embed(const std::vector<Image>& images) = 0;
  virtual double perceptual_distance(const Image& a, const Image& b) = 0;
};

// Desk-scale stand-in: the distance is the mean absolute pixel difference;
// features are 4x4 block means of luma plus the channel means.
class PixelStatsExtractor final : public FeatureExtractorClient {
 public:
  std::string id() const override { return "pixel-stats-v1"; }
  Eigen::MatrixXd embed(const std::vector<Image>& images) override;
  double perceptual_distance(const Image& a, const Image& b) override;
};

// Delegates to the client. Throws kExtractorUnavailable when the client is
// missing or fails, kInvalidArgument on a negative or non-finite value.
double lpips(const Image& a, const Image& b, FeatureExtractorClient* fx);

// Symmetric PSD square root; eigenvalues below 1e-10 are treated as zero.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m);

// Frechet distance between Gaussian fits of two feature sets (rows are
// samples, unbiased covariance). Needs at least two rows per set.
double fid(const Eigen::MatrixXd& set_a, const Eigen::MatrixXd& set_b);

struct PairMetrics {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  double lpips = 0.0;
};

struct MetricsReport {
  std::string dataset_id;
  std::string extractor_id;
  std::string config_hash;
  std::vector<PairMetrics> pairs;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_lpips = 0.0;
  std::optional<double> fid;  // absent with fewer than two pairs
  std::vector<std::string> missing;
};

nlohmann::json report_to_json(const MetricsReport& report);
std::string format_table(const MetricsReport& report);

// Pairs PNG files by stem across the two directories, preprocesses both
// sides with resize_pad_512 and computes every metric. Ids present on only
// one side are listed in `missing` and skipped.
MetricsReport evaluate(const std::filesystem::path& results_dir,
                       const std::filesystem::path& references_dir,
                       FeatureExtractorClient& fx);

// Same protocol on in-memory pairs (results[i] against references[i]).
MetricsReport evaluate_pairs(const std::vector<std::string>& ids,
                             const std::vector<Image>& results,
                             const std::vector<Image>& references,
                             FeatureExtractorClient& fx);

// Writes `out` (JSON) and the same path with a .txt extension (table).
void write_report(const MetricsReport& report, const std::filesystem::path& out);

}  // namespace erasekit::eval
