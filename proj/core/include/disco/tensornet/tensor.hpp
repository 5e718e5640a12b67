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

#include <cstdint>
#include <numeric>
#include <vector>

#include "disco/error.hpp"

namespace disco::tensornet {

/// Dense n-dimensional array with an optional same-shape gradient buffer.
/// 4D activations use NHWC layout: index ((n*H + h)*W + w)*C + c.
template <typename T>
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty unless gradients are tracked

  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> s, bool with_grad = false)
      : shape(std::move(s)) {
    for (std::int64_t d : shape)
      if (d <= 0) raise(Errc::ShapeError, "tensor extents must be positive");
    values.assign(static_cast<std::size_t>(size()), T(0));
    if (with_grad) grad.assign(values.size(), T(0));
  }

  std::int64_t size() const {
    return std::accumulate(shape.begin(), shape.end(), std::int64_t(1),
                           std::multiplies<std::int64_t>());
  }
  std::int64_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), T(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }

  T* data() { return values.data(); }
  const T* data() const { return values.data(); }
};

template <typename T>
inline void require_shape(const Tensor<T>& t, std::initializer_list<std::int64_t> s,
                          const char* what) {
  if (t.shape != std::vector<std::int64_t>(s))
    raise(Errc::ShapeError, std::string("unexpected shape for ") + what);
}

}  // namespace disco::tensornet
