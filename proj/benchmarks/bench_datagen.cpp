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

#include <filesystem>
#include <numeric>
#include <vector>

#include "disco/datagen/datagen.hpp"
#include "disco/net/trainer.hpp"
#include "disco/rng.hpp"

namespace {

using namespace disco;

std::filesystem::path bench_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "disco_bench_ds";
  return dir;
}

// A 100-sample dataset shared by the IO benchmarks, generated once.
const std::string& fixture_dir() {
  static const std::string dir = [] {
    const auto d = bench_dir();
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    datagen::GenConfig cfg;
    cfg.count = 100;
    cfg.seed = 22;
    datagen::generate_dataset(cfg, d.string());
    return d.string();
  }();
  return dir;
}

void BM_RenderAndEncode(benchmark::State& state) {
  datagen::GenConfig cfg;
  cfg.seed = 23;
  const datagen::SceneSampler sampler(cfg);
  Rng rng(24);
  const datagen::ScenePlan plan =
      sampler.sample_scene(rng, datagen::OcclusionClass::truncated);
  for (auto _ : state) {
    const datagen::RenderedSample sample =
        datagen::render_and_encode(plan, cfg.bins);
    benchmark::DoNotOptimize(sample.image.data());
  }
}
BENCHMARK(BM_RenderAndEncode);

void BM_GenerateSample(benchmark::State& state) {
  // Average end-to-end cost across the 50/20/30 schedule.
  datagen::GenConfig cfg;
  cfg.seed = 25;
  const datagen::SceneSampler sampler(cfg);
  Rng rng(26);
  std::int64_t index = 0;
  for (auto _ : state) {
    const datagen::ScenePlan plan =
        sampler.sample_scene(rng, datagen::schedule_class(index++));
    const datagen::RenderedSample sample =
        datagen::render_and_encode(plan, cfg.bins);
    benchmark::DoNotOptimize(sample.image.data());
  }
}
BENCHMARK(BM_GenerateSample);

void BM_WriteDataset(benchmark::State& state) {
  const std::vector<datagen::RenderedSample> samples =
      datagen::read_dataset(fixture_dir());
  const datagen::DatasetManifest mani =
      datagen::load_manifest(fixture_dir());
  datagen::DatasetHeader header;
  header.bins = mani.bins;
  header.keypoints = mani.keypoints;
  header.width = mani.width;
  header.height = mani.height;
  header.channels = mani.channels;
  header.seed = mani.seed;
  const auto out = bench_dir().string() + "_w";
  for (auto _ : state) {
    datagen::write_dataset(samples, out, header);
  }
  std::filesystem::remove_all(out);
}
BENCHMARK(BM_WriteDataset);

void BM_ReadDataset(benchmark::State& state) {
  fixture_dir();
  for (auto _ : state) {
    const std::vector<datagen::RenderedSample> samples =
        datagen::read_dataset(fixture_dir());
    benchmark::DoNotOptimize(samples.data());
  }
}
BENCHMARK(BM_ReadDataset);

void BM_LoadBatch(benchmark::State& state) {
  const datagen::DatasetReader reader(fixture_dir());
  std::vector<std::int64_t> idx(100);
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  for (auto _ : state) {
    const net::BatchData<float> batch = net::load_batch<float>(reader, idx);
    benchmark::DoNotOptimize(batch.images.values.data());
  }
}
BENCHMARK(BM_LoadBatch);

}  // namespace

BENCHMARK_MAIN();
