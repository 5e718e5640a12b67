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
#include <cstdint>
#include <string>
#include <vector>

#include "disco/tensornet/ops.hpp"
#include "disco/tensornet/tensor.hpp"

namespace disco::net {

using tensornet::Tensor;

enum class Concept : std::uint8_t {
  pose = 0,
  visibility = 1,
  keypoints3d = 2,
  keypoints2d = 3,
};

const char* concept_name(Concept c);

struct HeadSpec {
  Concept kind;
  int attach_depth;    // conv layer index in [1, convLayers]
  double loss_weight;  // lambda
};

struct NetworkConfig {
  int conv_layers = 25;
  std::array<int, 3> downsample_at = {4, 8, 12};
  std::array<int, 4> channel_plan = {32, 64, 128, 256};
  std::vector<HeadSpec> heads;  // defaults to the DISCO layout when empty
  int image_size = 32;
  int channels = 1;    // input image channels
  int bins = 24;       // M (pose head width)
  int keypoints = 12;  // K
  double dropout = 0.2;
  /// When set, enforces the robustness window: first head deeper than layer
  /// 10 and at least 3 layers between consecutive head depths.
  bool paper_faithful = true;

  int head_output_dim(Concept c) const;
  int layer_out_channels(int layer) const;  // layer is 1-indexed
  int layer_stride(int layer) const;
  void validate() const;
};

/// The default deeply supervised layout: pose@13 (lambda 0.1), visibility@17,
/// 3D@21, 2D@25 (lambda 1 each).
std::vector<HeadSpec> disco_heads();

/// Table-1 structural variants by name: disco, reverse, plain-2d, plain-3d,
/// plain-all, dsn-2d, dsn-3d, disco-3d-2d, disco-vis-3d-2d, disco-3d-vis.
/// Throws ConfigError for unknown names.
NetworkConfig make_variant(const std::string& name, NetworkConfig base = {});
std::vector<std::string> variant_names();

template <typename T>
struct Targets {
  Tensor<T> pose;        // [N, M]
  Tensor<T> visibility;  // [N, K], 1 = occluded
  Tensor<T> kp3d;        // [N, 3K]
  Tensor<T> kp2d;        // [N, 2K]

  const Tensor<T>& for_concept(Concept c) const {
    switch (c) {
      case Concept::pose: return pose;
      case Concept::visibility: return visibility;
      case Concept::keypoints3d: return kp3d;
      case Concept::keypoints2d: return kp2d;
    }
    raise(Errc::ConfigError, "bad concept");
  }
};

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> per_head;         // lambda-weighted, config order
  std::array<double, 4> per_concept{};  // lambda-weighted sums by Concept
};

/// Trunk of 3x3 conv + batch norm + ReLU blocks (stride 2 at downsample_at,
/// dropout after those blocks, no spatial pooling) with GAP->FC(512)->ReLU->
/// FC(outDim) supervision heads.
template <typename T>
class Network {
 public:
  Network(const NetworkConfig& config, std::uint64_t init_seed);

  const NetworkConfig& config() const { return config_; }

  /// Runs the trunk and all heads. In training mode, batch statistics are
  /// used and activations are cached for backward; dropout masks derive
  /// from dropout_key.
  void forward(const Tensor<T>& images, bool training,
               std::uint64_t dropout_key = 0);

  int head_count() const { return static_cast<int>(heads_.size()); }
  const HeadSpec& head_spec(int i) const { return heads_[static_cast<std::size_t>(i)].spec; }
  const Tensor<T>& head_output(int i) const { return heads_[static_cast<std::size_t>(i)].out; }

  /// Deepest head predicting the given concept, or nullptr when the variant
  /// has none. Valid after forward().
  const Tensor<T>* output_for(Concept c) const;

  /// Lambda-weighted per-head L2 losses of the cached forward pass.
  LossBreakdown compute_losses(const Targets<T>& targets) const;

  /// compute_losses + full backpropagation. Parameter gradients are zeroed
  /// first, so afterwards they hold exactly this batch's gradient.
  LossBreakdown train_backward(const Targets<T>& targets);

  /// Trainable parameters (conv kernels, BN scale/shift, head weights).
  std::vector<std::pair<std::string, Tensor<T>*>> parameters();

  /// Trainable parameters plus BN running statistics — the checkpoint state.
  std::vector<std::pair<std::string, Tensor<T>*>> state_tensors();

  void save_checkpoint(const std::string& path);
  /// Loads a checkpoint produced by save_checkpoint for the same config.
  /// Missing/mismatched tensors raise FormatError.
  void load_checkpoint(const std::string& path);

  /// Gradient of a trunk conv kernel (layer is 1-indexed); introspection for
  /// the head-isolation property.
  const Tensor<T>& trunk_kernel(int layer) const;

 private:
  struct Block {
    Tensor<T> kernel, gamma, beta, running_mean, running_var;
    int stride = 1;
    double dropout_p = 0.0;
    // per-pass caches
    Tensor<T> conv_out, bn_out, relu_out, drop_out;
    tensornet::BnCache<T> bn_cache;
    Tensor<T>& output() { return dropout_p > 0 ? drop_out : relu_out; }
  };
  struct HeadImpl {
    HeadSpec spec;
    Tensor<T> w1, b1, w2, b2;
    // per-pass caches
    Tensor<T> gap_out, fc1_out, relu_out, out;
  };

  Tensor<T>& feature_at_depth(int depth);

  NetworkConfig config_;
  std::vector<Block> blocks_;
  std::vector<HeadImpl> heads_;
  Tensor<T> input_;
  bool training_pass_ = false;
  std::uint64_t dropout_key_ = 0;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace disco::net
