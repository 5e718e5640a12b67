// Copyright 2026 The disco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "disco/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace disco::eval {

namespace {

// Validates that two sample-major containers have identical shapes and a
// consistent keypoint count; returns that count summed over samples.
template <typename A, typename B>
std::size_t matched_size(const A& a, const B& b, const char* what) {
  if (a.size() != b.size())
    raise(Errc::ShapeError, std::string(what) + ": sample counts differ");
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size())
      raise(Errc::ShapeError,
            std::string(what) + ": keypoint counts differ at sample " +
                std::to_string(i));
    total += a[i].size();
  }
  return total;
}

}  // namespace

void PckConfig::validate() const {
  if (!(alpha > 0)) raise(Errc::ConfigError, "alpha must be positive");
  if (!(length > 0)) raise(Errc::ConfigError, "length must be positive");
}

double pck_2d(const Samples2d& predictions, const Samples2d& ground_truth,
              const SamplesFlag& occluded, const PckConfig& config) {
  config.validate();
  matched_size(predictions, ground_truth, "pck_2d");
  matched_size(predictions, occluded, "pck_2d");

  const double radius = config.alpha * config.length;
  std::int64_t visible = 0, correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t k = 0; k < predictions[i].size(); ++k) {
      if (occluded[i][k]) continue;
      ++visible;
      if ((predictions[i][k] - ground_truth[i][k]).norm() <= radius) ++correct;
    }
  }
  if (visible == 0)
    raise(Errc::EmptyEvaluation, "pck_2d: no visible keypoints");
  return static_cast<double>(correct) / static_cast<double>(visible);
}

double apk(const Samples2d& predictions, const SamplesScore& confidences,
           const Samples2d& ground_truth, const SamplesFlag& occluded,
           const PckConfig& config) {
  config.validate();
  matched_size(predictions, ground_truth, "apk");
  matched_size(predictions, confidences, "apk");
  matched_size(predictions, occluded, "apk");
  if (predictions.empty()) raise(Errc::EmptyEvaluation, "apk: no samples");

  const std::size_t types = predictions.front().size();
  const double radius = config.alpha * config.length;

  double ap_sum = 0.0;
  int scored_types = 0;
  std::vector<std::size_t> order;
  std::vector<double> precision;
  for (std::size_t k = 0; k < types; ++k) {
    std::int64_t positives = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
      if (!occluded[i][k]) ++positives;
    if (positives == 0) continue;  // recall undefined for this type

    // Rank the one-per-image predictions by confidence, descending; ties
    // break on the image index so reports are deterministic.
    order.resize(predictions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (confidences[a][k] != confidences[b][k])
        return confidences[a][k] > confidences[b][k];
      return a < b;
    });

    precision.assign(order.size(), 0.0);
    std::vector<std::uint8_t> is_tp(order.size(), 0);
    std::int64_t tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const std::size_t i = order[rank];
      // With one candidate per image, the only possible match is the same
      // image's keypoint of this type; it is unmatched at this rank.
      if (!occluded[i][k] &&
          (predictions[i][k] - ground_truth[i][k]).norm() <= radius) {
        ++tp;
        is_tp[rank] = 1;
      }
      precision[rank] =
          static_cast<double>(tp) / static_cast<double>(rank + 1);
    }

    // All-points interpolated AP: each true positive advances recall by 1/P
    // and scores the best precision at or beyond its rank.
    double best = 0.0, ap = 0.0;
    for (std::size_t rank = order.size(); rank-- > 0;) {
      best = std::max(best, precision[rank]);
      if (is_tp[rank]) ap += best / static_cast<double>(positives);
    }
    ap_sum += ap;
    ++scored_types;
  }

  if (scored_types == 0)
    raise(Errc::EmptyEvaluation, "apk: no visible ground truth");
  return ap_sum / static_cast<double>(scored_types);
}

double pck_3d(const Samples3d& predictions, const Samples3d& ground_truth,
              double alpha) {
  if (!(alpha > 0)) raise(Errc::ConfigError, "alpha must be positive");
  const std::size_t total =
      matched_size(predictions, ground_truth, "pck_3d");
  if (total == 0) raise(Errc::EmptyEvaluation, "pck_3d: no keypoints");

  std::int64_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    for (std::size_t k = 0; k < predictions[i].size(); ++k)
      if ((predictions[i][k] - ground_truth[i][k]).norm() < alpha) ++correct;
  return static_cast<double>(correct) / static_cast<double>(total);
}

double pck_3d(const std::vector<Eigen::Vector3d>& prediction,
              const std::vector<Eigen::Vector3d>& ground_truth, double alpha) {
  return pck_3d(Samples3d{prediction}, Samples3d{ground_truth}, alpha);
}

namespace {

// Principal axes as matrix columns, largest eigenvalue first. Throws when the
// middle eigenvalue vanishes: a (near-)collinear point set has no usable
// second axis.
Eigen::Matrix3d principal_axes(const std::vector<Eigen::Vector3d>& points,
                               const Eigen::Vector3d& centroid) {
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Eigen::Vector3d& p : points) {
    const Eigen::Vector3d d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  if (solver.info() != Eigen::Success)
    raise(Errc::DegenerateGeometry, "pca_align: eigensolver failed");
  if (solver.eigenvalues()(1) < 1e-12)
    raise(Errc::DegenerateGeometry, "pca_align: rank-deficient point set");

  Eigen::Matrix3d axes;
  for (int j = 0; j < 3; ++j) axes.col(j) = solver.eigenvectors().col(2 - j);
  return axes;
}

Eigen::Vector3d centroid_of(const std::vector<Eigen::Vector3d>& points) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const Eigen::Vector3d& p : points) c += p;
  return c / static_cast<double>(points.size());
}

}  // namespace

std::vector<Eigen::Vector3d> pca_align(
    const std::vector<Eigen::Vector3d>& prediction,
    const std::vector<Eigen::Vector3d>& ground_truth) {
  if (prediction.size() != ground_truth.size())
    raise(Errc::ShapeError, "pca_align: keypoint counts differ");
  if (prediction.size() < 3)
    raise(Errc::DegenerateGeometry, "pca_align: need at least 3 points");

  const Eigen::Vector3d cp = centroid_of(prediction);
  const Eigen::Vector3d cg = centroid_of(ground_truth);
  const Eigen::Matrix3d vp = principal_axes(prediction, cp);
  const Eigen::Matrix3d vg = principal_axes(ground_truth, cg);

  // Eigenvector signs are arbitrary; try every sign assignment that yields a
  // proper rotation (4 of the 8) and keep the closest fit.
  double best_err = std::numeric_limits<double>::infinity();
  Eigen::Matrix3d best_rot = Eigen::Matrix3d::Identity();
  for (int mask = 0; mask < 8; ++mask) {
    Eigen::Vector3d signs{(mask & 1) ? -1.0 : 1.0, (mask & 2) ? -1.0 : 1.0,
                          (mask & 4) ? -1.0 : 1.0};
    const Eigen::Matrix3d rot =
        vg * signs.asDiagonal() * vp.transpose();
    if (rot.determinant() < 0) continue;
    double err = 0;
    for (std::size_t i = 0; i < prediction.size(); ++i)
      err += (cp + rot * (prediction[i] - cp) - ground_truth[i]).squaredNorm();
    if (err < best_err) {
      best_err = err;
      best_rot = rot;
    }
  }

  std::vector<Eigen::Vector3d> aligned(prediction.size());
  for (std::size_t i = 0; i < prediction.size(); ++i)
    aligned[i] = cp + best_rot * (prediction[i] - cp);
  return aligned;
}

double average_recall(const Samples3d& predictions,
                      const Samples3d& ground_truth) {
  const std::size_t total =
      matched_size(predictions, ground_truth, "average_recall");
  if (total == 0) raise(Errc::EmptyEvaluation, "average_recall: no keypoints");

  std::vector<double> distances;
  distances.reserve(total);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::vector<Eigen::Vector3d> aligned =
        pca_align(predictions[i], ground_truth[i]);
    for (std::size_t k = 0; k < aligned.size(); ++k)
      distances.push_back((aligned[k] - ground_truth[i][k]).norm());
  }

  double sum = 0;
  for (int step = 1; step <= 100; ++step) {
    const double alpha = static_cast<double>(step) / 100.0;
    std::int64_t correct = 0;
    for (double d : distances)
      if (d < alpha) ++correct;
    sum += static_cast<double>(correct) / static_cast<double>(total);
  }
  return sum / 100.0;
}

Mask skeleton_to_mask(const std::vector<Eigen::Vector2d>& keypoints_2d,
                      const std::vector<std::array<int, 3>>& faces,
                      int image_size) {
  if (image_size < 1) raise(Errc::ConfigError, "image_size must be positive");
  const int n = static_cast<int>(keypoints_2d.size());
  for (const auto& face : faces)
    for (int idx : face)
      if (idx < 0 || idx >= n)
        raise(Errc::ShapeError, "face index without a 2D estimate");

  Mask mask;
  mask.size = image_size;
  mask.data.assign(static_cast<std::size_t>(image_size) *
                       static_cast<std::size_t>(image_size),
                   0);

  for (const auto& face : faces) {
    const Eigen::Vector2d& a = keypoints_2d[static_cast<std::size_t>(face[0])];
    const Eigen::Vector2d& b = keypoints_2d[static_cast<std::size_t>(face[1])];
    const Eigen::Vector2d& c = keypoints_2d[static_cast<std::size_t>(face[2])];
    const double area2 =
        (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (area2 == 0.0) continue;
    const double orient = area2 > 0 ? 1.0 : -1.0;

    const double min_x = std::min({a.x(), b.x(), c.x()});
    const double max_x = std::max({a.x(), b.x(), c.x()});
    const double min_y = std::min({a.y(), b.y(), c.y()});
    const double max_y = std::max({a.y(), b.y(), c.y()});
    const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int x1 = std::min(image_size - 1,
                            static_cast<int>(std::ceil(max_x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int y1 = std::min(image_size - 1,
                            static_cast<int>(std::ceil(max_y - 0.5)));

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = static_cast<double>(x) + 0.5;
        const double py = static_cast<double>(y) + 0.5;
        const double e0 = ((b.x() - a.x()) * (py - a.y()) -
                           (b.y() - a.y()) * (px - a.x())) *
                          orient;
        const double e1 = ((c.x() - b.x()) * (py - b.y()) -
                           (c.y() - b.y()) * (px - b.x())) *
                          orient;
        const double e2 = ((a.x() - c.x()) * (py - c.y()) -
                           (a.y() - c.y()) * (px - c.x())) *
                          orient;
        if (e0 >= 0 && e1 >= 0 && e2 >= 0)
          mask.data[static_cast<std::size_t>(y) *
                        static_cast<std::size_t>(image_size) +
                    static_cast<std::size_t>(x)] = 1;
      }
    }
  }
  return mask;
}

double iou(const Mask& a, const Mask& b) {
  if (a.size != b.size || a.data.size() != b.data.size())
    raise(Errc::ShapeError, "iou: mask sizes differ");
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool in_a = a.data[i] != 0, in_b = b.data[i] != 0;
    if (in_a && in_b) ++inter;
    if (in_a || in_b) ++uni;
  }
  if (uni == 0) raise(Errc::EmptyEvaluation, "iou: both masks empty");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double pose_error(const std::vector<float>& pred_scores, double gt_azimuth,
                  const skelgeom::AzimuthBinning& binning) {
  binning.validate();
  if (static_cast<int>(pred_scores.size()) != binning.bins)
    raise(Errc::ShapeError, "pose_error: score vector does not match binning");

  std::size_t best = 0;
  for (std::size_t i = 1; i < pred_scores.size(); ++i)
    if (pred_scores[i] > pred_scores[best]) best = i;

  const double center = binning.bin_center(static_cast<int>(best));
  double diff = skelgeom::wrap_angle(center - gt_azimuth);
  if (diff > skelgeom::kTwoPi / 2.0) diff = skelgeom::kTwoPi - diff;
  return diff * 360.0 / skelgeom::kTwoPi;
}

void write_report_json(const std::vector<MetricReport>& reports,
                       const std::string& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const MetricReport& r : reports) {
    nlohmann::json entry = {{"metric", r.metric},
                            {"alpha", r.alpha},
                            {"value", r.value},
                            {"sampleCount", r.sample_count}};
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [name, value] : r.per_class) per_class[name] = value;
    entry["perClass"] = std::move(per_class);
    doc.push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) raise(Errc::IoError, "cannot open " + path);
  out << doc.dump(2) << "\n";
  if (!out) raise(Errc::IoError, "failed writing " + path);
}

void write_pck_curve_csv(const std::vector<double>& alphas,
                         const std::vector<double>& values,
                         const std::string& path) {
  if (alphas.size() != values.size())
    raise(Errc::ShapeError, "pck curve: column lengths differ");
  std::ofstream out(path);
  if (!out) raise(Errc::IoError, "cannot open " + path);
  out << "alpha,value\n";
  for (std::size_t i = 0; i < alphas.size(); ++i)
    out << alphas[i] << "," << values[i] << "\n";
  if (!out) raise(Errc::IoError, "failed writing " + path);
}

}  // namespace disco::eval
