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
#include <string>
#include <vector>

#include <Eigen/Core>

namespace disco::skelgeom {

enum class Category { car, chair, sofa };

const char* category_name(Category c);
Category category_from_name(const std::string& name);

using Triangle = std::array<Eigen::Vector3d, 3>;

/// A category's sparse 3D structure: named keypoints, their connectivity,
/// coarse mask faces over keypoint indices, and the (denser) surface
/// triangles used for rendering.
struct SkeletonModel {
  Category category = Category::car;
  std::vector<std::string> keypoint_names;
  std::vector<Eigen::Vector3d> keypoints;
  std::vector<std::array<int, 2>> edges;  // keypoint index pairs
  std::vector<std::array<int, 3>> faces;  // keypoint index triples
  std::vector<Triangle> mesh;             // render surface, outward wound

  int keypoint_count() const { return static_cast<int>(keypoints.size()); }

  /// Throws ConfigError when indices are out of range or K < 4.
  void validate() const;
};

/// Centers the keypoint centroid at the origin and scales so the longest
/// axis-aligned keypoint extent is exactly 1. The mesh is transformed with
/// the same similarity; edges and faces are untouched. Idempotent.
/// Throws DegenerateGeometry when all keypoints coincide.
SkeletonModel normalize_model(const SkeletonModel& model);

/// JSON round trip. The document layout is
///   {category, keypoints:[{name, xyz}], edges, faces, params}
/// When "params" is present the full model (including the render mesh) is
/// rebuilt procedurally from them; otherwise the mesh is the coarse faces.
SkeletonModel load_model_json(const std::string& path);
void save_model_json(const SkeletonModel& model, const std::vector<double>& params,
                     const std::string& path);

}  // namespace disco::skelgeom
