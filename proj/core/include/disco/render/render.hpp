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

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/skelgeom/camera.hpp"
#include "disco/skelgeom/model.hpp"

namespace disco::render {

using skelgeom::Camera;
using skelgeom::SkeletonModel;
using skelgeom::Triangle;

/// Rigid placement of a model in the world: yaw about +z, then translation.
/// Toy models are z-up, so yaw is the only rotation the scenes need.
struct Placement {
  double yaw = 0.0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {c * p.x() - s * p.y() + translation.x(),
            s * p.x() + c * p.y() + translation.y(), p.z() + translation.z()};
  }
};

struct Instance {
  SkeletonModel model;  // normalized object frame
  Placement placement;
  std::array<float, 3> albedo = {0.8f, 0.8f, 0.8f};
};

enum class BackgroundKind : std::uint8_t { uniform, gradient, checker, noise };

struct BackgroundSpec {
  BackgroundKind kind = BackgroundKind::uniform;
  float value_a = 0.5f;  // uniform value / gradient start / checker color A
  float value_b = 0.5f;  // gradient end / checker color B / noise high
  double angle = 0.0;    // gradient direction, radians
  int checker_size = 8;  // checker cell edge in pixels
  int noise_cells = 4;   // value-noise lattice resolution per axis
  std::uint64_t seed = 0;
};

struct SceneConfig {
  std::vector<Instance> instances;  // 1 or 2
  Camera camera;
  Eigen::Vector3d light_dir = Eigen::Vector3d(0, 0, 1);  // toward the light
  double light_strength = 1.0;
  BackgroundSpec background;
  int channels = 1;  // 1 (gray) or 3 (rgb)

  /// Checks instance count, channel count, light normalization and the
  /// 3D non-overlap requirement. Throws ConfigError on violation.
  void validate() const;
};

struct FrameBuffer {
  int width = 0, height = 0, channels = 1;
  std::vector<float> color;            // H*W*C, row-major, [0,1]
  std::vector<float> depth;            // H*W, +inf where empty
  std::vector<std::int32_t> instance_id;  // H*W, 0 = background

  static constexpr float kEmptyDepth = std::numeric_limits<float>::infinity();

  FrameBuffer() = default;
  FrameBuffer(int w, int h, int c)
      : width(w),
        height(h),
        channels(c),
        color(static_cast<std::size_t>(w) * h * c, 0.f),
        depth(static_cast<std::size_t>(w) * h, kEmptyDepth),
        instance_id(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t pixel(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  float& at(int x, int y, int c) {
    return color[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c) const {
    return color[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Oriented bounding box used for the scene non-overlap test.
struct Obb {
  Eigen::Vector3d center;
  Eigen::Matrix3d axes;  // columns are unit axes
  Eigen::Vector3d half;  // half extents along the axes
};

Obb instance_obb(const Instance& instance);
bool obb_overlap(const Obb& a, const Obb& b);

/// All mesh triangles of an instance, transformed to world coordinates.
std::vector<Triangle> instance_world_triangles(const Instance& instance);

/// Z-buffered flat-shaded rasterization at pixel centers (x+0.5, y+0.5).
/// Depth ties resolve to the lower triangle index in scene draw order
/// (instances in order, triangles in mesh order) so output is deterministic.
FrameBuffer rasterize(const SceneConfig& scene);

/// Ray-traced occlusion flags for arbitrary world-space points: entry i is 1
/// when a scene triangle blocks the camera ray strictly before the point
/// (tolerance kVisibilityTolerance) or the point projects outside the image.
constexpr double kVisibilityTolerance = 1e-4;
std::vector<std::uint8_t> keypoint_visibility(
    const SceneConfig& scene, const std::vector<Eigen::Vector3d>& points);

/// Visible fraction of one instance: pixels it wins in the full scene over
/// pixels it wins rendered alone. Throws ZeroProjection when the instance
/// covers no pixel alone.
double occlusion_ratio(const SceneConfig& scene, int instance_index);

enum class Boundary : std::uint8_t { left, right, top, bottom };

struct BoundaryShift {
  Boundary boundary;
  double fraction;  // of image size along that axis, in [0, 0.3]
};

/// Affine pixel-coordinate map from the source frame to the cropped frame:
/// out = scale * src + offset, per axis.
struct CropRecord {
  double scale_x = 1.0, scale_y = 1.0;
  double offset_x = 0.0, offset_y = 0.0;
  int crop_x0 = 0, crop_y0 = 0, crop_w = 0, crop_h = 0;

  Eigen::Vector2d apply(const Eigen::Vector2d& src) const {
    return {scale_x * src.x() + offset_x, scale_y * src.y() + offset_y};
  }
};

struct TruncateResult {
  FrameBuffer frame;
  CropRecord crop;
};

/// Crops two image boundaries inward by the given fractions and rescales the
/// remaining region back to the original size with nearest-neighbor sampling.
TruncateResult truncate(const FrameBuffer& frame,
                        const std::array<BoundaryShift, 2>& shifts);

/// Fills background (instance_id == 0) pixels with the procedural pattern;
/// object pixels are left untouched.
FrameBuffer composite_background(const FrameBuffer& frame,
                                 const BackgroundSpec& background);

/// Debug dump: PGM (1 channel) or PPM (3 channels), binary, maxval 255, plus
/// "<path>.depth.json" with depth-buffer statistics.
void write_frame_debug(const FrameBuffer& frame, const std::string& image_path);

}  // namespace disco::render
