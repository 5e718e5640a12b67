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

// Hot-path costs of the tensor core: the convolution dominates training time,
// so its forward/backward throughput decides the step budget.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <map>
#include <string>

#include "disco/net/network.hpp"
#include "disco/net/trainer.hpp"
#include "disco/rng.hpp"
#include "disco/tensornet/ops.hpp"
#include "disco/tensornet/tensor.hpp"

namespace {

using namespace disco;
using tensornet::Tensor;

Tensor<float> random_tensor(std::vector<std::int64_t> shape, std::uint64_t seed,
                            bool with_grad = false) {
  Tensor<float> t(std::move(shape), with_grad);
  Rng rng(seed);
  for (float& v : t.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

// Stage-2 trunk shape of the default network: 16x16 at 128 channels.
void BM_Conv3x3Forward(benchmark::State& state) {
  const int stride = static_cast<int>(state.range(0));
  Tensor<float> input = random_tensor({8, 16, 16, 128}, 1);
  Tensor<float> kernel = random_tensor({9 * 128, 128}, 2);
  for (auto _ : state) {
    Tensor<float> out = tensornet::conv3x3_forward(input, kernel, stride);
    benchmark::DoNotOptimize(out.values.data());
  }
}
BENCHMARK(BM_Conv3x3Forward)->Arg(1)->Arg(2);

void BM_Conv3x3Backward(benchmark::State& state) {
  Tensor<float> input = random_tensor({8, 16, 16, 128}, 3, true);
  Tensor<float> kernel = random_tensor({9 * 128, 128}, 4, true);
  Tensor<float> out = tensornet::conv3x3_forward(input, kernel, 1);
  out.ensure_grad();
  for (float& g : out.grad) g = 1e-3f;
  for (auto _ : state) {
    input.zero_grad();
    kernel.zero_grad();
    tensornet::conv3x3_backward(input, kernel, 1, out);
    benchmark::DoNotOptimize(kernel.grad.data());
  }
}
BENCHMARK(BM_Conv3x3Backward);

void BM_BatchNormForward(benchmark::State& state) {
  Tensor<float> input = random_tensor({8, 16, 16, 128}, 5);
  Tensor<float> gamma = random_tensor({128}, 6);
  Tensor<float> beta = random_tensor({128}, 7);
  Tensor<float> mean({128}), var({128});
  for (float& v : var.values) v = 1.0f;
  for (auto _ : state) {
    tensornet::BnCache<float> cache;
    Tensor<float> out = tensornet::batchnorm_forward(input, gamma, beta, mean,
                                                     var, true, cache);
    benchmark::DoNotOptimize(out.values.data());
  }
}
BENCHMARK(BM_BatchNormForward);

void BM_FcForward(benchmark::State& state) {
  Tensor<float> input = random_tensor({100, 256}, 8);
  Tensor<float> weight = random_tensor({256, 512}, 9);
  Tensor<float> bias = random_tensor({512}, 10);
  for (auto _ : state) {
    Tensor<float> out = tensornet::fc_forward(input, weight, bias);
    benchmark::DoNotOptimize(out.values.data());
  }
}
BENCHMARK(BM_FcForward);

void BM_NetworkForwardEval(benchmark::State& state) {
  net::NetworkConfig cfg = net::make_variant("disco");
  net::Network<float> network(cfg, 1);
  Tensor<float> images =
      random_tensor({8, cfg.image_size, cfg.image_size, cfg.channels}, 11);
  for (auto _ : state) {
    network.forward(images, false, 0);
    benchmark::DoNotOptimize(network.head_output(0).values.data());
  }
}
BENCHMARK(BM_NetworkForwardEval);

void BM_TrainingStep(benchmark::State& state) {
  net::NetworkConfig cfg = net::make_variant("disco");
  net::Network<float> network(cfg, 2);
  net::BatchData<float> batch;
  batch.images =
      random_tensor({8, cfg.image_size, cfg.image_size, cfg.channels}, 12);
  batch.targets.pose = random_tensor({8, cfg.bins}, 13);
  batch.targets.visibility = random_tensor({8, cfg.keypoints}, 14);
  batch.targets.kp3d = random_tensor({8, 3 * cfg.keypoints}, 15);
  batch.targets.kp2d = random_tensor({8, 2 * cfg.keypoints}, 16);
  std::map<std::string, Tensor<float>> velocities;
  std::uint64_t step = 0;
  for (auto _ : state) {
    const net::LossBreakdown losses = net::training_step(
        network, batch, velocities, net::StepConfig{1e-4, 0.9, 1e-4, step++});
    benchmark::DoNotOptimize(losses.total);
  }
}
BENCHMARK(BM_TrainingStep);

}  // namespace

BENCHMARK_MAIN();
