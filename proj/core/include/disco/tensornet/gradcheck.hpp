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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "disco/rng.hpp"
#include "disco/tensornet/tensor.hpp"

namespace disco::tensornet {

struct GradCheckEntry {
  std::string tensor;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int probes = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  int probes = 0;
  std::vector<GradCheckEntry> per_tensor;
};

/// Relative error with a floor that absorbs finite-difference noise on
/// near-zero gradients: |a-n| / max(|a|, |n|, 1e-4).
double grad_rel_err(double analytic, double numeric);

/// Central-difference verification of an analytic gradient.
///
/// `loss(true)` must run forward + backward, leaving fresh (not accumulated)
/// gradients in each parameter tensor; `loss(false)` must run forward only.
/// The callable has to be deterministic — fix any dropout keys and batch-norm
/// mode before calling. A random subset of entries per tensor is probed with
/// step eps * max(1, |w|).
GradCheckReport grad_check(
    const std::function<double(bool with_grad)>& loss,
    const std::vector<std::pair<std::string, Tensor<double>*>>& params,
    int probes_per_tensor, double eps, Rng& rng);

}  // namespace disco::tensornet
