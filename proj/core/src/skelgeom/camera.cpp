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

#include "disco/skelgeom/camera.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Geometry>

#include "disco/error.hpp"

namespace disco::skelgeom {

double wrap_angle(double radians) {
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;  // fmod can land exactly on 2*pi
  return a;
}

Eigen::Vector3d Camera::position() const {
  const double ce = std::cos(elevation);
  return target + distance * Eigen::Vector3d(ce * std::cos(azimuth),
                                             ce * std::sin(azimuth),
                                             std::sin(elevation));
}

Eigen::Matrix3d Camera::world_to_camera() const {
  const Eigen::Vector3d forward = (target - position()).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-12) {
    // Looking straight down: pick a right vector from the azimuth.
    right = Eigen::Vector3d(-std::sin(azimuth), std::cos(azimuth), 0.0);
  }
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d m;
  m.row(0) = right;
  m.row(1) = down;
  m.row(2) = forward;
  return m;
}

void Camera::validate(double min_clear_distance) const {
  if (!(focal > 0.0)) raise(Errc::ConfigError, "camera focal must be positive");
  if (width <= 0 || height <= 0)
    raise(Errc::ConfigError, "camera image size must be positive");
  if (!(distance > min_clear_distance))
    raise(Errc::ConfigError, "camera distance must exceed the object extent");
  if (azimuth < 0.0 || azimuth >= kTwoPi)
    raise(Errc::ConfigError, "camera azimuth must be wrapped to [0, 2*pi)");
}

Camera Camera::wrapped() const {
  Camera c = *this;
  c.azimuth = wrap_angle(c.azimuth);
  return c;
}

Projection project(const Eigen::Vector3d& point, const Camera& camera) {
  Projection p;
  if (!try_project(point, camera, p))
    raise(Errc::BehindCamera, "point has non-positive camera depth");
  return p;
}

bool try_project(const Eigen::Vector3d& point, const Camera& camera,
                 Projection& out) {
  const Eigen::Vector3d rel = point - camera.position();
  const Eigen::Matrix3d m = camera.world_to_camera();
  const double z = m.row(2).dot(rel);
  if (!(z > 0.0)) return false;
  const double x = m.row(0).dot(rel);
  const double y = m.row(1).dot(rel);
  out.pixel = camera.principal_point +
              Eigen::Vector2d(camera.focal * x / z, camera.focal * y / z);
  out.depth = z;
  return true;
}

void AzimuthBinning::validate() const {
  if (bins < 2) raise(Errc::ConfigError, "azimuth binning needs at least 2 bins");
}

int AzimuthBinning::bin_index(double azimuth) const {
  const double a = wrap_angle(azimuth);
  int idx = static_cast<int>(std::floor(a / (kTwoPi / bins)));
  if (idx >= bins) idx = bins - 1;  // guard the a -> 2*pi rounding edge
  return idx;
}

double AzimuthBinning::bin_center(int index) const {
  return (index + 0.5) * (kTwoPi / bins);
}

std::vector<float> azimuth_to_onehot(double azimuth,
                                     const AzimuthBinning& binning) {
  binning.validate();
  std::vector<float> onehot(binning.bins, 0.0f);
  onehot[binning.bin_index(azimuth)] = 1.0f;
  return onehot;
}

}  // namespace disco::skelgeom
