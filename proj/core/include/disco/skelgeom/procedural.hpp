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

#include <vector>

#include "disco/rng.hpp"
#include "disco/skelgeom/model.hpp"

namespace disco::skelgeom {

/// Axis-aligned box in the object frame (before normalization the builders
/// work in rough metric units; the returned boxes are in the normalized
/// frame, matching the model).
struct AaBox {
  Eigen::Vector3d lo, hi;

  bool contains(const Eigen::Vector3d& p, double tol = 1e-9) const {
    return (p.array() >= lo.array() - tol).all() &&
           (p.array() <= hi.array() + tol).all();
  }
};

/// A procedurally built model plus the cuboid decomposition it was
/// assembled from (used for containment checks and debugging).
struct BuiltModel {
  SkeletonModel model;                 // normalized
  std::vector<AaBox> boxes;            // same frame as model
  std::vector<double> params;          // the generating parameter vector
};

/// Number of shape parameters for a category.
int param_count(Category category);

/// Draws a random parameter vector from the category's dimension ranges.
std::vector<double> sample_params(Category category, Rng& rng);

/// Deterministically builds the normalized toy model for a parameter vector.
/// Keypoint counts: car K=12 (4 wheels, 4 roof corners, 4 bumper corners),
/// chair and sofa K=10.
BuiltModel build_model(Category category, const std::vector<double>& params);

int keypoint_count(Category category);

}  // namespace disco::skelgeom
