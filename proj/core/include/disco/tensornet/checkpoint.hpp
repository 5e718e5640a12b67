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

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "disco/tensornet/tensor.hpp"

namespace disco::tensornet {

// Checkpoint container: magic "DSCW", u32 version, u32 tensor count, then per
// tensor: u32 name length, name bytes, u8 dtype (0 = f32, 1 = f64), u32 rank,
// i64 extents, raw little-endian values. Gradients are not serialized.

/// Writes tensors in the given order. Throws IoError on filesystem failure.
template <typename T>
void save_tensors(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor<T>*>>& tensors);

/// Reads a checkpoint written by save_tensors. Throws FormatError on bad
/// magic, truncation, a version bump, or a dtype other than T.
template <typename T>
std::map<std::string, Tensor<T>> load_tensors(const std::string& path);

}  // namespace disco::tensornet
