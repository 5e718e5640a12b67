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

#ifndef DISCO_EVAL_METRICS_HPP_
#define DISCO_EVAL_METRICS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "disco/error.hpp"
#include "disco/skelgeom/camera.hpp"

namespace disco::eval {

// Sample-major containers: outer index is the image/sample, inner index the
// keypoint. Visibility flags follow the dataset convention throughout this
// module: 1 = occluded or out of view, 0 = visible.
using Samples2d = std::vector<std::vector<Eigen::Vector2d>>;
using Samples3d = std::vector<std::vector<Eigen::Vector3d>>;
using SamplesFlag = std::vector<std::vector<std::uint8_t>>;
using SamplesScore = std::vector<std::vector<double>>;

struct PckConfig {
  double alpha = 0.1;  // fraction of the reference length
  double length = 1.0; // larger image dimension in pixels (2D protocols)

  void validate() const;
};

// Fraction of ground-truth-visible keypoints whose prediction lies within
// alpha * length (<=) of the ground truth, pooled over all samples.
double pck_2d(const Samples2d& predictions, const Samples2d& ground_truth,
              const SamplesFlag& occluded, const PckConfig& config);

// Mean average precision of keypoint detection, one prediction per image and
// keypoint type. Predictions of a type are ranked by confidence (higher =
// more likely visible) across all images; a prediction is a true positive if
// it lands within alpha * length of the not-yet-matched ground-truth-visible
// keypoint of that type in its image. AP uses the all-points interpolated
// precision/recall rule; types with no visible ground truth are excluded.
double apk(const Samples2d& predictions, const SamplesScore& confidences,
           const Samples2d& ground_truth, const SamplesFlag& occluded,
           const PckConfig& config);

// Fraction of keypoints with euclidean error strictly below alpha, in
// normalized object coordinates. All keypoints count, visibility is not
// consulted.
double pck_3d(const Samples3d& predictions, const Samples3d& ground_truth,
              double alpha);
double pck_3d(const std::vector<Eigen::Vector3d>& prediction,
              const std::vector<Eigen::Vector3d>& ground_truth, double alpha);

// Rotates the predicted point set about its own centroid so that its
// principal axes coincide with the ground truth's, choosing among the four
// proper-rotation sign assignments the one with the smallest summed squared
// error. Pure rotation: no translation or scaling is applied.
std::vector<Eigen::Vector3d> pca_align(
    const std::vector<Eigen::Vector3d>& prediction,
    const std::vector<Eigen::Vector3d>& ground_truth);

// Mean of pck_3d over the alpha grid {0.01, 0.02, ..., 1.00}, computed after
// aligning each sample with pca_align.
double average_recall(const Samples3d& predictions,
                      const Samples3d& ground_truth);

struct Mask {
  int size = 0;                    // square, size x size pixels
  std::vector<std::uint8_t> data;  // row-major, 1 = inside

  bool at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(size) +
                static_cast<std::size_t>(x)] != 0;
  }
};

// Fills every coarse face triangle given 2D keypoint estimates; the mask is
// the union of the filled triangles. Pixel centers decide membership, both
// windings are accepted, degenerate triangles contribute nothing.
Mask skeleton_to_mask(const std::vector<Eigen::Vector2d>& keypoints_2d,
                      const std::vector<std::array<int, 3>>& faces,
                      int image_size);

double iou(const Mask& a, const Mask& b);

// Absolute circular difference, in degrees, between the center of the argmax
// bin of a pose distribution and the ground-truth azimuth.
double pose_error(const std::vector<float>& pred_scores, double gt_azimuth,
                  const skelgeom::AzimuthBinning& binning);

struct MetricReport {
  std::string metric;
  double alpha = 0.0;
  double value = 0.0;
  std::int64_t sample_count = 0;
  std::vector<std::pair<std::string, double>> per_class;
};

void write_report_json(const std::vector<MetricReport>& reports,
                       const std::string& path);

// Two-column CSV (alpha,value) of a PCK-vs-alpha curve for plotting.
void write_pck_curve_csv(const std::vector<double>& alphas,
                         const std::vector<double>& values,
                         const std::string& path);

}  // namespace disco::eval

#endif  // DISCO_EVAL_METRICS_HPP_
