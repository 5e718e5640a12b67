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

#pragma once

#include <Eigen/Core>

namespace disco::skelgeom {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Wrap an angle to [0, 2*pi).
double wrap_angle(double radians);

/// Orbiting pinhole camera. The camera sits at `distance` from `target`,
/// at the given azimuth (about +z, measured from +x) and elevation above the
/// horizontal plane, looking at `target`. Image x grows to the right of the
/// view, image y grows downward.
struct Camera {
  double azimuth = 0.0;    // radians, wrapped to [0, 2*pi)
  double elevation = 0.0;  // radians
  double distance = 3.0;   // world units
  double focal = 120.0;    // pixels
  Eigen::Vector2d principal_point{32.0, 32.0};  // pixels
  int width = 64;
  int height = 64;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();

  Eigen::Vector3d position() const;

  /// Rows are (right, down, forward) in world coordinates.
  Eigen::Matrix3d world_to_camera() const;

  /// Throws ConfigError on invalid intrinsics or on a distance that does not
  /// clear `min_clear_distance` (the longest object extent in the scene).
  void validate(double min_clear_distance = 0.0) const;

  /// Copy with azimuth wrapped into [0, 2*pi).
  Camera wrapped() const;
};

struct Projection {
  Eigen::Vector2d pixel;
  double depth;  // camera-frame z
};

/// Pinhole projection. Throws BehindCamera when the point has non-positive
/// camera-frame depth.
Projection project(const Eigen::Vector3d& point, const Camera& camera);

/// Non-throwing variant for hot loops; returns false when behind the camera.
bool try_project(const Eigen::Vector3d& point, const Camera& camera,
                 Projection& out);

/// Uniform discretization of [0, 2*pi) into `bins` azimuth sectors.
struct AzimuthBinning {
  int bins = 24;

  void validate() const;
  int bin_index(double azimuth) const;
  double bin_center(int index) const;
};

/// One-hot encoding of a (wrapped) azimuth angle. Exactly one entry is 1.
std::vector<float> azimuth_to_onehot(double azimuth, const AzimuthBinning& binning);

}  // namespace disco::skelgeom
