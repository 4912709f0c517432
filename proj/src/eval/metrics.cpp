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

#include "erasekit/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "erasekit/common/codec.hpp"
#include "erasekit/common/error.hpp"

namespace erasekit::eval {
namespace {

using Eigen::MatrixXd;

void require_same(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    fail(ErrorCode::kShapeMismatch,
         "images differ: " + a.shape_string() + " vs " + b.shape_string());
  }
}

Eigen::VectorXd gaussian_1d(int size, double sigma) {
  Eigen::VectorXd g(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    g(i) = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
  }
  return g / g.sum();
}

// Valid separable correlation with g along both axes.
MatrixXd filter_valid(const MatrixXd& x, const Eigen::VectorXd& g) {
  const auto k = g.size();
  const auto rows = x.rows() - k + 1;
  const auto cols = x.cols() - k + 1;
  MatrixXd tmp = MatrixXd::Zero(rows, x.cols());
  for (Eigen::Index i = 0; i < k; ++i) tmp += g(i) * x.middleRows(i, rows);
  MatrixXd out = MatrixXd::Zero(rows, cols);
  for (Eigen::Index j = 0; j < k; ++j) out += g(j) * tmp.middleCols(j, cols);
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Image resize_bilinear(const Image& image, int height, int width) {
  if (image.empty() || height <= 0 || width <= 0) {
    fail(ErrorCode::kDegenerateImage, "cannot resize an empty image");
  }
  Image out(height, width, image.channels());
  const double sy = static_cast<double>(image.height()) / height;
  const double sx = static_cast<double>(image.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(image.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double v =
            (1 - wy) * ((1 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c)) +
            wy * ((1 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c));
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

Image resize_pad_512(const Image& image) {
  if (image.height() <= 0 || image.width() <= 0) {
    fail(ErrorCode::kDegenerateImage, "image has a zero dimension");
  }
  const int h = image.height();
  const int w = image.width();
  const int long_side = std::max(h, w);
  const auto scaled = [&](int side) {
    return std::max(1, static_cast<int>(std::lround(
                           static_cast<double>(side) * kEvalSide / long_side)));
  };
  const int ch = h >= w ? kEvalSide : scaled(h);
  const int cw = w >= h ? kEvalSide : scaled(w);
  const Image content = resize_bilinear(image, ch, cw);
  const int top = (kEvalSide - ch) / 2;
  const int left = (kEvalSide - cw) / 2;
  Image out(kEvalSide, kEvalSide, image.channels());
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        out.at(top + y, left + x, c) = content.at(y, x, c);
      }
    }
  }
  return out;
}

double psnr(const Image& a, const Image& b) {
  require_same(a, b);
  if (a.empty()) fail(ErrorCode::kDegenerateImage, "empty image");
  double se = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = static_cast<double>(va[i]) - vb[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(va.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

MatrixXd luma(const Image& image) {
  if (image.channels() != 3 && image.channels() != 1) {
    fail(ErrorCode::kInvalidArgument, "luma needs 1 or 3 channels");
  }
  MatrixXd y(image.height(), image.width());
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      y(r, c) = image.channels() == 1
                    ? image.at(r, c, 0)
                    : 0.299 * image.at(r, c, 0) + 0.587 * image.at(r, c, 1) +
                          0.114 * image.at(r, c, 2);
    }
  }
  return y;
}

MatrixXd gaussian_window(int size, double sigma) {
  const Eigen::VectorXd g = gaussian_1d(size, sigma);
  return g * g.transpose();
}

double ssim(const Image& a, const Image& b) {
  require_same(a, b);
  if (a.height() < 11 || a.width() < 11) {
    fail(ErrorCode::kDegenerateImage, "SSIM needs images of at least 11x11");
  }
  const Eigen::VectorXd g = gaussian_1d(11, 1.5);
  const MatrixXd x = luma(a);
  const MatrixXd y = luma(b);
  const MatrixXd mx = filter_valid(x, g);
  const MatrixXd my = filter_valid(y, g);
  const MatrixXd sxx = filter_valid(x.cwiseProduct(x), g) - mx.cwiseProduct(mx);
  const MatrixXd syy = filter_valid(y.cwiseProduct(y), g) - my.cwiseProduct(my);
  const MatrixXd sxy = filter_valid(x.cwiseProduct(y), g) - mx.cwiseProduct(my);
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  const auto num = (2 * mx.array() * my.array() + c1) * (2 * sxy.array() + c2);
  const auto den = (mx.array().square() + my.array().square() + c1) *
                   (sxx.array() + syy.array() + c2);
  return (num / den).mean();
}

MatrixXd PixelStatsExtractor::embed(const std::vector<Image>& images) {
  constexpr int kGrid = 4;
  MatrixXd out(static_cast<Eigen::Index>(images.size()), kGrid * kGrid + 3);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& im = images[n];
    if (im.empty() || im.channels() != 3) {
      fail(ErrorCode::kInvalidArgument, "features need a non-empty RGB image");
    }
    const MatrixXd y = luma(im);
    auto row = out.row(static_cast<Eigen::Index>(n));
    for (int by = 0; by < kGrid; ++by) {
      for (int bx = 0; bx < kGrid; ++bx) {
        const int y0 = by * im.height() / kGrid;
        const int y1 = std::max(y0 + 1, (by + 1) * im.height() / kGrid);
        const int x0 = bx * im.width() / kGrid;
        const int x1 = std::max(x0 + 1, (bx + 1) * im.width() / kGrid);
        row(by * kGrid + bx) =
            y.block(y0, x0, std::min(y1, im.height()) - y0,
                    std::min(x1, im.width()) - x0).mean() / 255.0;
      }
    }
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int r = 0; r < im.height(); ++r) {
        for (int q = 0; q < im.width(); ++q) s += im.at(r, q, c);
      }
      row(kGrid * kGrid + c) = s / static_cast<double>(im.pixels()) / 255.0;
    }
  }
  return out;
}

double PixelStatsExtractor::perceptual_distance(const Image& a, const Image& b) {
  require_same(a, b);
  if (a.empty()) return 0.0;
  double s = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    s += std::abs(static_cast<double>(va[i]) - vb[i]);
  }
  return s / static_cast<double>(va.size());
}

double lpips(const Image& a, const Image& b, FeatureExtractorClient* fx) {
  if (fx == nullptr) fail(ErrorCode::kExtractorUnavailable, "no perceptual client");
  require_same(a, b);
  double d;
  try {
    d = fx->perceptual_distance(a, b);
  } catch (const std::exception& e) {
    fail(ErrorCode::kExtractorUnavailable, e.what());
  }
  if (!std::isfinite(d) || d < 0.0) {
    fail(ErrorCode::kInvalidArgument, "perceptual distance must be finite and >= 0");
  }
  return d;
}

MatrixXd sqrtm_psd(const MatrixXd& m) {
  const MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    ev(i) = ev(i) < 1e-10 ? 0.0 : std::sqrt(ev(i));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double fid(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() < 2 || b.rows() < 2) {
    fail(ErrorCode::kInvalidArgument, "FID needs at least two samples per set");
  }
  if (a.cols() != b.cols()) {
    fail(ErrorCode::kShapeMismatch, "feature widths differ");
  }
  const Eigen::RowVectorXd mu_a = a.colwise().mean();
  const Eigen::RowVectorXd mu_b = b.colwise().mean();
  const MatrixXd ca = a.rowwise() - mu_a;
  const MatrixXd cb = b.rowwise() - mu_b;
  const MatrixXd sa = ca.transpose() * ca / static_cast<double>(a.rows() - 1);
  const MatrixXd sb = cb.transpose() * cb / static_cast<double>(b.rows() - 1);
  const MatrixXd root_a = sqrtm_psd(sa);
  const MatrixXd cross = sqrtm_psd(root_a * sb * root_a);
  const double d = (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() -
                   2.0 * cross.trace();
  return std::max(0.0, d);
}

MetricsReport evaluate_pairs(const std::vector<std::string>& ids,
                             const std::vector<Image>& results,
                             const std::vector<Image>& references,
                             FeatureExtractorClient& fx) {
  if (ids.size() != results.size() || ids.size() != references.size()) {
    fail(ErrorCode::kInvalidArgument, "ids, results and references differ in count");
  }
  MetricsReport report;
  report.extractor_id = fx.id();
  std::vector<Image> res;
  std::vector<Image> ref;
  std::vector<double> p, s, l;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Image a = resize_pad_512(results[i]);
    Image b = resize_pad_512(references[i]);
    PairMetrics m{ids[i], psnr(a, b), ssim(a, b), lpips(a, b, &fx)};
    p.push_back(m.psnr);
    s.push_back(m.ssim);
    l.push_back(m.lpips);
    report.pairs.push_back(std::move(m));
    res.push_back(std::move(a));
    ref.push_back(std::move(b));
  }
  report.mean_psnr = mean(p);
  report.mean_ssim = mean(s);
  report.mean_lpips = mean(l);
  if (res.size() >= 2) report.fid = fid(fx.embed(res), fx.embed(ref));
  const nlohmann::json protocol{{"side", kEvalSide},
                                {"pad", "floor-top-left"},
                                {"psnr_cap", kPsnrCap},
                                {"ssim", "luma-gauss11-1.5"},
                                {"extractor", report.extractor_id}};
  report.config_hash = sha256_hex(protocol.dump()).substr(0, 16);
  return report;
}

MetricsReport evaluate(const std::filesystem::path& results_dir,
                       const std::filesystem::path& references_dir,
                       FeatureExtractorClient& fx) {
  const auto stems = [](const std::filesystem::path& dir) {
    std::map<std::string, std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) {
      fail(ErrorCode::kIoFailure, "not a directory: " + dir.string());
    }
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".png") {
        out[e.path().stem().string()] = e.path();
      }
    }
    return out;
  };
  const auto res = stems(results_dir);
  const auto ref = stems(references_dir);
  std::vector<std::string> ids;
  std::vector<Image> a, b;
  std::vector<std::string> missing;
  for (const auto& [id, path] : res) {
    const auto it = ref.find(id);
    if (it == ref.end()) {
      missing.push_back(id);
      continue;
    }
    ids.push_back(id);
    a.push_back(read_png_rgb(path));
    b.push_back(read_png_rgb(it->second));
  }
  for (const auto& [id, path] : ref) {
    if (!res.contains(id)) missing.push_back(id);
  }
  std::sort(missing.begin(), missing.end());
  MetricsReport report = evaluate_pairs(ids, a, b, fx);
  report.dataset_id = references_dir.filename().string();
  report.missing = std::move(missing);
  return report;
}

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"id", p.id}, {"psnr", p.psnr}, {"ssim", p.ssim}, {"lpips", p.lpips}});
  }
  nlohmann::json agg{{"psnr", r.mean_psnr}, {"ssim", r.mean_ssim}, {"lpips", r.mean_lpips}};
  agg["fid"] = r.fid ? nlohmann::json(*r.fid) : nlohmann::json(nullptr);
  return {{"dataset_id", r.dataset_id},
          {"extractor", r.extractor_id},
          {"config_hash", r.config_hash},
          {"pairs", pairs},
          {"aggregate", agg},
          {"missing", r.missing}};
}

std::string format_table(const MetricsReport& r) {
  std::size_t width = 4;
  for (const auto& p : r.pairs) width = std::max(width, p.id.size());
  const int w = static_cast<int>(width);
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %9s  %7s  %7s\n", w, "id", "PSNR", "SSIM", "LPIPS");
  os << line;
  for (const auto& p : r.pairs) {
    std::snprintf(line, sizeof line, "%-*s  %9.3f  %7.4f  %7.4f\n", w, p.id.c_str(),
                  p.psnr, p.ssim, p.lpips);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-*s  %9.3f  %7.4f  %7.4f\n", w, "mean",
                r.mean_psnr, r.mean_ssim, r.mean_lpips);
  os << line;
  if (r.fid) {
    std::snprintf(line, sizeof line, "FID %.4f\n", *r.fid);
    os << line;
  }
  for (const auto& id : r.missing) os << "missing " << id << "\n";
  return os.str();
}

void write_report(const MetricsReport& report, const std::filesystem::path& out) {
  write_text(out, report_to_json(report).dump(2));
  auto table = out;
  table.replace_extension(".txt");
  write_text(table, format_table(report));
}

}  // namespace erasekit::eval
