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
#include <vector>

#include "disco/tensornet/tensor.hpp"

namespace disco::tensornet {

/// Caps the BLAS thread pool (the rest of the library is single-threaded per
/// network instance). Call once at startup; defaults to 1 for bit-stable runs.
void set_blas_threads(int threads);

// ---------------------------------------------------------------------------
// 3x3 convolution, padding 1, stride 1 or 2 (ceil-halving), NHWC.
// Kernel layout: [9*Cin, Cout] with row index (ky*3 + kx)*Cin + cin, i.e. the
// im2col column order. No bias term; every conv is followed by batch norm.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv3x3_forward(const Tensor<T>& input, const Tensor<T>& kernel,
                          int stride);

/// Accumulates into input.grad and kernel.grad where those buffers exist.
/// `output.grad` supplies the upstream gradient.
template <typename T>
void conv3x3_backward(Tensor<T>& input, Tensor<T>& kernel, int stride,
                      const Tensor<T>& output);

/// Output spatial size for one axis (kernel 3, padding 1).
inline std::int64_t conv_out_extent(std::int64_t in, int stride) {
  return (in - 1) / stride + 1;
}

// ---------------------------------------------------------------------------
// Batch normalization over all axes except the channel (last) axis. eps 1e-5.
// ---------------------------------------------------------------------------

constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.1;  // running = (1-m)*running + m*batch

template <typename T>
struct BnCache {
  std::vector<T> mean;     // per channel, batch statistics
  std::vector<T> inv_std;  // 1/sqrt(var + eps)
  std::int64_t count = 0;  // reduced elements per channel
};

/// Training mode uses batch statistics and updates the running buffers;
/// eval mode reads the running buffers and leaves them untouched (cache
/// stays empty). Throws InsufficientBatch for a training batch of one.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma,
                            const Tensor<T>& beta, Tensor<T>& running_mean,
                            Tensor<T>& running_var, bool training,
                            BnCache<T>& cache);

template <typename T>
void batchnorm_backward(Tensor<T>& input, Tensor<T>& gamma, Tensor<T>& beta,
                        const BnCache<T>& cache, const Tensor<T>& output);

// ---------------------------------------------------------------------------
// Pointwise and pooling ops.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input);

template <typename T>
void relu_backward(Tensor<T>& input, const Tensor<T>& output);

/// Inverted dropout with a stateless keyed mask: element i is kept when
/// keyed_uniform(key, i) >= p and scaled by 1/(1-p). The mask is a pure
/// function of (key, i), so forward and backward regenerate it identically
/// and results do not depend on evaluation order. Identity when not training.
template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& input, double p, std::uint64_t key,
                          bool training);

template <typename T>
void dropout_backward(Tensor<T>& input, double p, std::uint64_t key,
                      bool training, const Tensor<T>& output);

/// [N,H,W,C] -> [N,C] per-channel means.
template <typename T>
Tensor<T> global_average_pool_forward(const Tensor<T>& input);

template <typename T>
void global_average_pool_backward(Tensor<T>& input, const Tensor<T>& output);

// ---------------------------------------------------------------------------
// Fully connected: y = x W + b, x:[N,Cin], W:[Cin,Cout], b:[Cout].
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> fc_forward(const Tensor<T>& input, const Tensor<T>& weight,
                     const Tensor<T>& bias);

template <typename T>
void fc_backward(Tensor<T>& input, Tensor<T>& weight, Tensor<T>& bias,
                 const Tensor<T>& output);

// ---------------------------------------------------------------------------
// Loss and optimizer.
// ---------------------------------------------------------------------------

/// Mean squared error over every element (mean convention keeps the paper's
/// per-head loss weights independent of the output dimension).
template <typename T>
T l2_loss(const Tensor<T>& prediction, const Tensor<T>& target);

/// Adds scale * d(l2)/d(prediction) into prediction.grad.
template <typename T>
void l2_loss_backward(Tensor<T>& prediction, const Tensor<T>& target, T scale);

/// v <- momentum*v + grad + weightDecay*w;  w <- w - lr*v.
/// Throws NonFiniteGradient (leaving w and v untouched) on any non-finite
/// gradient entry.
template <typename T>
void sgd_step(Tensor<T>& weights, Tensor<T>& velocity, T lr, T momentum,
              T weight_decay);

}  // namespace disco::tensornet
