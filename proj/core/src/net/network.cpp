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

#include "disco/net/network.hpp"

#include <algorithm>
#include <cmath>

#include "disco/rng.hpp"
#include "disco/tensornet/checkpoint.hpp"

namespace disco::net {

namespace {

// Glorot-uniform fill: limit = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void glorot_fill(Tensor<T>& t, std::int64_t fan_in, std::int64_t fan_out,
                 Rng rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values) v = static_cast<T>(rng.uniform(-limit, limit));
}

std::string two_digits(int i) {
  return (i < 10 ? "0" : "") + std::to_string(i);
}

}  // namespace

const char* concept_name(Concept c) {
  switch (c) {
    case Concept::pose: return "pose";
    case Concept::visibility: return "visibility";
    case Concept::keypoints3d: return "keypoints3d";
    case Concept::keypoints2d: return "keypoints2d";
  }
  return "unknown";
}

int NetworkConfig::head_output_dim(Concept c) const {
  switch (c) {
    case Concept::pose: return bins;
    case Concept::visibility: return keypoints;
    case Concept::keypoints3d: return 3 * keypoints;
    case Concept::keypoints2d: return 2 * keypoints;
  }
  raise(Errc::ConfigError, "bad concept");
}

int NetworkConfig::layer_out_channels(int layer) const {
  int stage = 0;
  for (int d : downsample_at)
    if (layer >= d) ++stage;
  return channel_plan[static_cast<std::size_t>(stage)];
}

int NetworkConfig::layer_stride(int layer) const {
  for (int d : downsample_at)
    if (layer == d) return 2;
  return 1;
}

void NetworkConfig::validate() const {
  if (conv_layers < 1) raise(Errc::ConfigError, "conv_layers must be positive");
  for (std::size_t i = 0; i < downsample_at.size(); ++i) {
    if (downsample_at[i] < 1 || downsample_at[i] > conv_layers)
      raise(Errc::ConfigError, "downsample layer out of range");
    if (i > 0 && downsample_at[i] <= downsample_at[i - 1])
      raise(Errc::ConfigError, "downsample layers must increase");
  }
  for (int c : channel_plan)
    if (c < 1) raise(Errc::ConfigError, "channel plan entries must be positive");
  if (image_size < 8) raise(Errc::ConfigError, "image_size too small");
  if (channels != 1 && channels != 3)
    raise(Errc::ConfigError, "input channels must be 1 or 3");
  if (bins < 2) raise(Errc::ConfigError, "bins must be at least 2");
  if (keypoints < 1) raise(Errc::ConfigError, "keypoints must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    raise(Errc::ConfigError, "dropout must be in [0, 1)");
  if (heads.empty()) raise(Errc::ConfigError, "at least one head required");
  for (const HeadSpec& h : heads) {
    if (h.attach_depth < 1 || h.attach_depth > conv_layers)
      raise(Errc::ConfigError, "head attach depth out of range");
    if (h.loss_weight < 0)
      raise(Errc::ConfigError, "head loss weight must be non-negative");
  }
  if (paper_faithful) {
    std::vector<int> depths;
    for (const HeadSpec& h : heads) depths.push_back(h.attach_depth);
    std::sort(depths.begin(), depths.end());
    if (depths.front() <= 10)
      raise(Errc::ConfigError,
            "paperFaithful requires the first head deeper than layer 10");
    for (std::size_t i = 1; i < depths.size(); ++i)
      if (depths[i] - depths[i - 1] < 3)
        raise(Errc::ConfigError,
              "paperFaithful requires >= 3 layers between heads");
  }
}

std::vector<HeadSpec> disco_heads() {
  return {{Concept::pose, 13, 0.1},
          {Concept::visibility, 17, 1.0},
          {Concept::keypoints3d, 21, 1.0},
          {Concept::keypoints2d, 25, 1.0}};
}

NetworkConfig make_variant(const std::string& name, NetworkConfig base) {
  base.heads.clear();
  base.paper_faithful = true;
  if (name == "disco") {
    base.heads = disco_heads();
  } else if (name == "reverse") {
    base.heads = {{Concept::keypoints2d, 13, 1.0},
                  {Concept::keypoints3d, 17, 1.0},
                  {Concept::visibility, 21, 1.0},
                  {Concept::pose, 25, 0.1}};
  } else if (name == "plain-2d") {
    base.heads = {{Concept::keypoints2d, 25, 1.0}};
  } else if (name == "plain-3d") {
    base.heads = {{Concept::keypoints3d, 25, 1.0}};
  } else if (name == "plain-all") {
    base.heads = {{Concept::pose, 25, 0.1},
                  {Concept::visibility, 25, 1.0},
                  {Concept::keypoints3d, 25, 1.0},
                  {Concept::keypoints2d, 25, 1.0}};
    base.paper_faithful = false;  // all heads share one depth
  } else if (name == "dsn-2d") {
    base.heads = {{Concept::keypoints2d, 13, 1.0},
                  {Concept::keypoints2d, 17, 1.0},
                  {Concept::keypoints2d, 21, 1.0},
                  {Concept::keypoints2d, 25, 1.0}};
  } else if (name == "dsn-3d") {
    base.heads = {{Concept::keypoints3d, 13, 1.0},
                  {Concept::keypoints3d, 17, 1.0},
                  {Concept::keypoints3d, 21, 1.0},
                  {Concept::keypoints3d, 25, 1.0}};
  } else if (name == "disco-3d-2d") {
    base.heads = {{Concept::keypoints3d, 21, 1.0},
                  {Concept::keypoints2d, 25, 1.0}};
  } else if (name == "disco-vis-3d-2d") {
    base.heads = {{Concept::visibility, 17, 1.0},
                  {Concept::keypoints3d, 21, 1.0},
                  {Concept::keypoints2d, 25, 1.0}};
  } else if (name == "disco-3d-vis") {
    base.heads = {{Concept::pose, 13, 0.1},
                  {Concept::keypoints3d, 17, 1.0},
                  {Concept::visibility, 21, 1.0},
                  {Concept::keypoints2d, 25, 1.0}};
  } else {
    raise(Errc::ConfigError, "unknown variant '" + name + "'");
  }
  base.validate();
  return base;
}

std::vector<std::string> variant_names() {
  return {"disco",  "reverse", "plain-2d",    "plain-3d",        "plain-all",
          "dsn-2d", "dsn-3d",  "disco-3d-2d", "disco-vis-3d-2d", "disco-3d-vis"};
}

template <typename T>
Network<T>::Network(const NetworkConfig& config, std::uint64_t init_seed)
    : config_(config) {
  if (config_.heads.empty()) config_.heads = disco_heads();
  config_.validate();
  const Rng root(init_seed);
  std::uint64_t stream = 0;

  int cin = config_.channels;
  for (int layer = 1; layer <= config_.conv_layers; ++layer) {
    Block b;
    const int cout = config_.layer_out_channels(layer);
    b.stride = config_.layer_stride(layer);
    b.dropout_p = b.stride == 2 ? config_.dropout : 0.0;
    b.kernel = Tensor<T>({9 * cin, cout}, true);
    glorot_fill(b.kernel, 9 * cin, 9 * cout, root.fork(stream++));
    b.gamma = Tensor<T>({cout}, true);
    std::fill(b.gamma.values.begin(), b.gamma.values.end(), T(1));
    b.beta = Tensor<T>({cout}, true);
    b.running_mean = Tensor<T>({cout});
    b.running_var = Tensor<T>({cout});
    std::fill(b.running_var.values.begin(), b.running_var.values.end(), T(1));
    blocks_.push_back(std::move(b));
    cin = cout;
  }

  for (const HeadSpec& spec : config_.heads) {
    HeadImpl h;
    h.spec = spec;
    const int c_at = config_.layer_out_channels(spec.attach_depth);
    const int out_dim = config_.head_output_dim(spec.kind);
    h.w1 = Tensor<T>({c_at, 512}, true);
    glorot_fill(h.w1, c_at, 512, root.fork(stream++));
    h.b1 = Tensor<T>({512}, true);
    h.w2 = Tensor<T>({512, out_dim}, true);
    glorot_fill(h.w2, 512, out_dim, root.fork(stream++));
    h.b2 = Tensor<T>({out_dim}, true);
    heads_.push_back(std::move(h));
  }
}

template <typename T>
Tensor<T>& Network<T>::feature_at_depth(int depth) {
  return blocks_[static_cast<std::size_t>(depth - 1)].output();
}

template <typename T>
void Network<T>::forward(const Tensor<T>& images, bool training,
                         std::uint64_t dropout_key) {
  if (images.rank() != 4 || images.dim(1) != config_.image_size ||
      images.dim(2) != config_.image_size || images.dim(3) != config_.channels)
    raise(Errc::ShapeError, "input batch does not match the network config");
  training_pass_ = training;
  dropout_key_ = dropout_key;
  input_ = images;
  input_.grad.clear();  // input gradients are never needed

  const Tensor<T>* x = &input_;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    Block& b = blocks_[i];
    b.conv_out = tensornet::conv3x3_forward(*x, b.kernel, b.stride);
    b.bn_out = tensornet::batchnorm_forward(b.conv_out, b.gamma, b.beta,
                                            b.running_mean, b.running_var,
                                            training, b.bn_cache);
    b.relu_out = tensornet::relu_forward(b.bn_out);
    if (b.dropout_p > 0)
      b.drop_out = tensornet::dropout_forward(
          b.relu_out, b.dropout_p, hash_combine(dropout_key, i), training);
    if (training) {
      b.conv_out.ensure_grad();
      b.bn_out.ensure_grad();
      b.relu_out.ensure_grad();
      if (b.dropout_p > 0) b.drop_out.ensure_grad();
    }
    x = &b.output();
  }

  for (HeadImpl& h : heads_) {
    const Tensor<T>& feat = feature_at_depth(h.spec.attach_depth);
    h.gap_out = tensornet::global_average_pool_forward(feat);
    h.fc1_out = tensornet::fc_forward(h.gap_out, h.w1, h.b1);
    h.relu_out = tensornet::relu_forward(h.fc1_out);
    h.out = tensornet::fc_forward(h.relu_out, h.w2, h.b2);
    if (training) {
      h.gap_out.ensure_grad();
      h.fc1_out.ensure_grad();
      h.relu_out.ensure_grad();
      h.out.ensure_grad();
    }
  }
}

template <typename T>
const Tensor<T>* Network<T>::output_for(Concept c) const {
  const Tensor<T>* best = nullptr;
  int best_depth = -1;
  for (const HeadImpl& h : heads_)
    if (h.spec.kind == c && h.spec.attach_depth > best_depth) {
      best = &h.out;
      best_depth = h.spec.attach_depth;
    }
  return best;
}

template <typename T>
LossBreakdown Network<T>::compute_losses(const Targets<T>& targets) const {
  LossBreakdown out;
  for (const HeadImpl& h : heads_) {
    const double l = static_cast<double>(
        tensornet::l2_loss(h.out, targets.for_concept(h.spec.kind)));
    const double weighted = h.spec.loss_weight * l;
    out.per_head.push_back(weighted);
    out.per_concept[static_cast<std::size_t>(h.spec.kind)] += weighted;
    out.total += weighted;
  }
  return out;
}

template <typename T>
LossBreakdown Network<T>::train_backward(const Targets<T>& targets) {
  if (!training_pass_)
    raise(Errc::ConfigError, "train_backward requires a training forward pass");
  for (auto& [name, t] : parameters()) t->zero_grad();

  const LossBreakdown breakdown = compute_losses(targets);

  // Heads first: seed each output gradient with its lambda and push the
  // gradient down to the attachment feature map. Zero-weight heads are
  // skipped entirely, so their (and deeper layers') gradients stay exact 0.
  for (HeadImpl& h : heads_) {
    if (h.spec.loss_weight == 0.0) continue;
    h.out.zero_grad();
    tensornet::l2_loss_backward(h.out, targets.for_concept(h.spec.kind),
                                static_cast<T>(h.spec.loss_weight));
    tensornet::fc_backward(h.relu_out, h.w2, h.b2, h.out);
    tensornet::relu_backward(h.fc1_out, h.relu_out);
    tensornet::fc_backward(h.gap_out, h.w1, h.b1, h.fc1_out);
    tensornet::global_average_pool_backward(
        feature_at_depth(h.spec.attach_depth), h.gap_out);
  }

  // Trunk, top down. Block i's output gradient is complete by the time we
  // get there: deeper blocks and any attached heads have already added in.
  for (int i = static_cast<int>(blocks_.size()) - 1; i >= 0; --i) {
    Block& b = blocks_[static_cast<std::size_t>(i)];
    if (b.dropout_p > 0)
      tensornet::dropout_backward(b.relu_out, b.dropout_p,
                                  hash_combine(dropout_key_, static_cast<std::size_t>(i)),
                                  true, b.drop_out);
    tensornet::relu_backward(b.bn_out, b.relu_out);
    tensornet::batchnorm_backward(b.conv_out, b.gamma, b.beta, b.bn_cache,
                                  b.bn_out);
    Tensor<T>& below = i == 0 ? input_ : blocks_[static_cast<std::size_t>(i - 1)].output();
    tensornet::conv3x3_backward(below, b.kernel, b.stride, b.conv_out);
  }
  return breakdown;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> Network<T>::parameters() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "trunk." + two_digits(static_cast<int>(i) + 1) + ".";
    out.emplace_back(p + "kernel", &blocks_[i].kernel);
    out.emplace_back(p + "gamma", &blocks_[i].gamma);
    out.emplace_back(p + "beta", &blocks_[i].beta);
  }
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    const std::string p = "head." + std::to_string(i) + "." +
                          concept_name(heads_[i].spec.kind) + ".";
    out.emplace_back(p + "w1", &heads_[i].w1);
    out.emplace_back(p + "b1", &heads_[i].b1);
    out.emplace_back(p + "w2", &heads_[i].w2);
    out.emplace_back(p + "b2", &heads_[i].b2);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> Network<T>::state_tensors() {
  auto out = parameters();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "trunk." + two_digits(static_cast<int>(i) + 1) + ".";
    out.emplace_back(p + "running_mean", &blocks_[i].running_mean);
    out.emplace_back(p + "running_var", &blocks_[i].running_var);
  }
  return out;
}

template <typename T>
void Network<T>::save_checkpoint(const std::string& path) {
  std::vector<std::pair<std::string, const Tensor<T>*>> named;
  for (auto& [name, t] : state_tensors()) named.emplace_back(name, t);
  tensornet::save_tensors(path, named);
}

template <typename T>
void Network<T>::load_checkpoint(const std::string& path) {
  auto loaded = tensornet::load_tensors<T>(path);
  for (auto& [name, t] : state_tensors()) {
    auto it = loaded.find(name);
    if (it == loaded.end())
      raise(Errc::FormatError, "checkpoint missing tensor '" + name + "'");
    if (it->second.shape != t->shape)
      raise(Errc::FormatError, "checkpoint shape mismatch for '" + name + "'");
    t->values = it->second.values;
  }
}

template <typename T>
const Tensor<T>& Network<T>::trunk_kernel(int layer) const {
  return blocks_[static_cast<std::size_t>(layer - 1)].kernel;
}

template class Network<float>;
template class Network<double>;

}  // namespace disco::net
