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

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "disco/eval/metrics.hpp"
#include "disco/eval/shapefit.hpp"
#include "disco/rng.hpp"
#include "disco/skelgeom/camera.hpp"
#include "disco/skelgeom/procedural.hpp"

namespace {

using namespace disco;

struct Fixture2d {
  eval::Samples2d pred, gt;
  eval::SamplesScore conf;
  eval::SamplesFlag occ;
};

Fixture2d make_fixture_2d(std::size_t samples, std::size_t keypoints) {
  Fixture2d f;
  Rng rng(27);
  f.pred.resize(samples);
  f.gt.resize(samples);
  f.conf.resize(samples);
  f.occ.resize(samples);
  for (std::size_t i = 0; i < samples; ++i)
    for (std::size_t k = 0; k < keypoints; ++k) {
      f.gt[i].emplace_back(rng.uniform(0, 32), rng.uniform(0, 32));
      f.pred[i].push_back(f.gt[i][k] + Eigen::Vector2d(rng.uniform(-4, 4),
                                                       rng.uniform(-4, 4)));
      f.conf[i].push_back(rng.uniform());
      f.occ[i].push_back(rng.uniform() < 0.3 ? 1 : 0);
    }
  return f;
}

eval::Samples3d make_fixture_3d(std::size_t samples, std::size_t keypoints,
                                double jitter, std::uint64_t seed) {
  Rng rng(seed);
  eval::Samples3d out(samples);
  for (std::size_t i = 0; i < samples; ++i)
    for (std::size_t k = 0; k < keypoints; ++k)
      out[i].emplace_back(rng.uniform(-1, 1) + rng.uniform(-jitter, jitter),
                          rng.uniform(-0.5, 0.5),
                          rng.uniform(-0.25, 0.25));
  return out;
}

void BM_Pck2d(benchmark::State& state) {
  const Fixture2d f = make_fixture_2d(500, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        eval::pck_2d(f.pred, f.gt, f.occ, {0.1, 32.0}));
  }
}
BENCHMARK(BM_Pck2d);

void BM_Apk(benchmark::State& state) {
  const Fixture2d f = make_fixture_2d(500, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        eval::apk(f.pred, f.conf, f.gt, f.occ, {0.1, 32.0}));
  }
}
BENCHMARK(BM_Apk);

// Dominated by the per-sample principal-axis alignment.
void BM_AverageRecall(benchmark::State& state) {
  const eval::Samples3d gt = make_fixture_3d(100, 12, 0.0, 28);
  const eval::Samples3d pred = make_fixture_3d(100, 12, 0.1, 29);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval::average_recall(pred, gt));
  }
}
BENCHMARK(BM_AverageRecall);

void BM_SkeletonToMask(benchmark::State& state) {
  Rng rng(30);
  const auto params = skelgeom::sample_params(skelgeom::Category::car, rng);
  const skelgeom::BuiltModel built =
      skelgeom::build_model(skelgeom::Category::car, params);
  skelgeom::Camera cam;
  std::vector<Eigen::Vector2d> kp2d;
  for (const Eigen::Vector3d& kp : built.model.keypoints)
    kp2d.push_back(skelgeom::project(kp, cam).pixel);
  for (auto _ : state) {
    const eval::Mask mask =
        eval::skeleton_to_mask(kp2d, built.model.faces, 64);
    benchmark::DoNotOptimize(mask.data.data());
  }
}
BENCHMARK(BM_SkeletonToMask);

void BM_FitPcaTo2d(benchmark::State& state) {
  Rng rng(31);
  std::vector<std::vector<Eigen::Vector3d>> shapes;
  for (int i = 0; i < 16; ++i) {
    const auto params = skelgeom::sample_params(skelgeom::Category::car, rng);
    shapes.push_back(
        skelgeom::build_model(skelgeom::Category::car, params).model.keypoints);
  }
  const eval::PcaShapeModel model = eval::build_pca_model(shapes, 4);

  skelgeom::Camera cam;
  cam.azimuth = 0.8;
  cam.elevation = 0.3;
  cam.distance = 3.0;
  std::vector<Eigen::Vector2d> landmarks;
  for (const Eigen::Vector3d& p : model.mean_shape)
    landmarks.push_back(skelgeom::project(p, cam).pixel);
  const std::vector<std::uint8_t> occ(landmarks.size(), 0);

  skelgeom::Camera intrinsics;
  for (auto _ : state) {
    const eval::PcaFitResult fit =
        eval::fit_pca_to_2d(landmarks, occ, model, intrinsics);
    benchmark::DoNotOptimize(fit.objective);
  }
}
BENCHMARK(BM_FitPcaTo2d);

}  // namespace

BENCHMARK_MAIN();
