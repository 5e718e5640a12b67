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

#ifndef DISCO_EVAL_SHAPEFIT_HPP_
#define DISCO_EVAL_SHAPEFIT_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "disco/error.hpp"
#include "disco/skelgeom/camera.hpp"

namespace disco::eval {

// Linear shape model over flattened K x 3 keypoint sets. Basis components are
// orthonormal under the flattened inner product; coefficient bounds are the
// three-sigma limits observed in the training shapes.
struct PcaShapeModel {
  std::vector<Eigen::Vector3d> mean_shape;           // K entries
  std::vector<std::vector<Eigen::Vector3d>> basis;   // B components, K each
  std::vector<double> coeff_bounds;                  // B entries, >= 0

  int keypoint_count() const { return static_cast<int>(mean_shape.size()); }
  int component_count() const { return static_cast<int>(basis.size()); }
  void validate() const;

  // mean + sum_b c[b] * basis[b]
  std::vector<Eigen::Vector3d> shape(const Eigen::VectorXd& coefficients) const;
};

PcaShapeModel build_pca_model(
    const std::vector<std::vector<Eigen::Vector3d>>& shapes, int components);

struct FitConfig {
  int azimuth_steps = 36;
  int elevation_steps = 5;
  double elevation_max = 40.0 * 3.14159265358979323846 / 180.0;
  double distance_min = 1.8;
  double distance_max = 5.4;
  int distance_steps = 7;
  int refine_candidates = 3;  // refine the best grid poses, keep the best fit
  int max_iterations = 100;
  double lambda0 = 1e-3;      // initial Levenberg damping
  double tolerance = 1e-12;   // relative objective improvement to stop

  void validate() const;
};

struct PcaFitResult {
  double azimuth = 0.0;
  double elevation = 0.0;
  double distance = 0.0;
  Eigen::VectorXd coefficients;
  std::vector<Eigen::Vector3d> fitted3d;  // in the object frame
  double objective = 0.0;                 // summed squared pixel error
  int iterations = 0;
  std::vector<double> objective_history;  // accepted values, non-increasing
};

// Recovers an orbit pose (azimuth, elevation, distance) and shape
// coefficients that minimize the squared reprojection error of the visible
// landmarks. `intrinsics` supplies focal length, principal point, image size,
// and orbit target; its own orbit angles are ignored. The search runs a
// coarse pose grid with zero coefficients, then jointly refines pose and
// coefficients with a damped Gauss-Newton loop; coefficients stay inside the
// model's bounds.
PcaFitResult fit_pca_to_2d(const std::vector<Eigen::Vector2d>& landmarks,
                           const std::vector<std::uint8_t>& occluded,
                           const PcaShapeModel& model,
                           const skelgeom::Camera& intrinsics,
                           const FitConfig& config = {});

}  // namespace disco::eval

#endif  // DISCO_EVAL_SHAPEFIT_HPP_
