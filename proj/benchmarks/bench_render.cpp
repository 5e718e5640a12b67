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

#include <benchmark/benchmark.h>

#include <vector>

#include <Eigen/Dense>

#include "disco/datagen/datagen.hpp"
#include "disco/render/render.hpp"
#include "disco/rng.hpp"

namespace {

using namespace disco;

datagen::ScenePlan sample_plan(int image_size, datagen::OcclusionClass cls,
                               std::uint64_t seed) {
  datagen::GenConfig cfg;
  cfg.image_size = image_size;
  cfg.seed = seed;
  const datagen::SceneSampler sampler(cfg);
  Rng rng(seed);
  return sampler.sample_scene(rng, cls);
}

void BM_Rasterize(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const datagen::ScenePlan plan =
      sample_plan(size, datagen::OcclusionClass::multiObject, 17);
  for (auto _ : state) {
    const render::FrameBuffer fb = render::rasterize(plan.scene);
    benchmark::DoNotOptimize(fb.depth.data());
  }
}
BENCHMARK(BM_Rasterize)->Arg(32)->Arg(64);

void BM_KeypointVisibility(benchmark::State& state) {
  const datagen::ScenePlan plan =
      sample_plan(32, datagen::OcclusionClass::multiObject, 18);
  std::vector<Eigen::Vector3d> points;
  for (const render::Instance& inst : plan.scene.instances)
    for (const Eigen::Vector3d& kp : inst.model.keypoints)
      points.push_back(inst.placement.apply(kp));
  for (auto _ : state) {
    const std::vector<std::uint8_t> flags =
        render::keypoint_visibility(plan.scene, points);
    benchmark::DoNotOptimize(flags.data());
  }
}
BENCHMARK(BM_KeypointVisibility);

void BM_OcclusionRatio(benchmark::State& state) {
  const datagen::ScenePlan plan =
      sample_plan(32, datagen::OcclusionClass::multiObject, 19);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render::occlusion_ratio(plan.scene, 0));
  }
}
BENCHMARK(BM_OcclusionRatio);

// Includes the rejection loop, so this is the realistic per-sample cost of
// the hardest class.
void BM_SampleSceneMultiObject(benchmark::State& state) {
  datagen::GenConfig cfg;
  cfg.seed = 20;
  const datagen::SceneSampler sampler(cfg);
  Rng rng(21);
  for (auto _ : state) {
    const datagen::ScenePlan plan =
        sampler.sample_scene(rng, datagen::OcclusionClass::multiObject);
    benchmark::DoNotOptimize(plan.seed);
  }
}
BENCHMARK(BM_SampleSceneMultiObject);

}  // namespace

BENCHMARK_MAIN();
