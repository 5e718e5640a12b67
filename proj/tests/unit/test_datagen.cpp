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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>

#include "disco/datagen/datagen.hpp"
#include "disco/error.hpp"
#include "disco/render/render.hpp"
#include "disco/rng.hpp"

using namespace disco;
using namespace disco::datagen;

namespace {

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

bool samples_equal(const RenderedSample& a, const RenderedSample& b) {
  return a.width == b.width && a.height == b.height && a.channels == b.channels &&
         a.image == b.image && a.pose_onehot == b.pose_onehot &&
         a.visibility == b.visibility && a.keypoints_2d == b.keypoints_2d &&
         a.keypoints_3d == b.keypoints_3d &&
         a.occlusion_class == b.occlusion_class &&
         a.meta.category == b.meta.category && a.meta.seed == b.meta.seed &&
         a.meta.params == b.meta.params;
}

}  // namespace

TEST_CASE("the class schedule interleaves exactly 50/20/30") {
  std::array<int, 3> counts{};
  for (std::int64_t i = 0; i < 1000; ++i)
    ++counts[static_cast<std::size_t>(schedule_class(i))];
  CHECK(counts[0] == 500);
  CHECK(counts[1] == 200);
  CHECK(counts[2] == 300);

  // every window of 10 has the 5/2/3 composition
  for (std::int64_t base = 0; base < 100; base += 10) {
    std::array<int, 3> window{};
    for (std::int64_t i = base; i < base + 10; ++i)
      ++window[static_cast<std::size_t>(schedule_class(i))];
    CHECK(window == std::array<int, 3>{5, 2, 3});
  }
}

TEST_CASE("domains fix the keypoint count") {
  CHECK(domain_keypoints(Domain::cars) == 12);
  CHECK(domain_keypoints(Domain::furniture) == 10);
}

TEST_CASE("gen config validation") {
  GenConfig cfg;
  cfg.count = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = GenConfig{};
  cfg.bins = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = GenConfig{};
  cfg.distance_min = 5.0;
  cfg.distance_max = 3.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("multi-object plans land in the occlusion band") {
  GenConfig cfg;
  cfg.domain = Domain::cars;
  cfg.seed = 31;
  SceneSampler sampler(cfg);
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const ScenePlan plan = sampler.sample_scene(rng, OcclusionClass::multiObject);
    REQUIRE(plan.scene.instances.size() == 2);
    const double ratio = render::occlusion_ratio(plan.scene, 0);
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.9);
  }
}

TEST_CASE("full and truncated plans use a single instance") {
  GenConfig cfg;
  cfg.seed = 32;
  SceneSampler sampler(cfg);
  Rng rng(6);
  const ScenePlan full = sampler.sample_scene(rng, OcclusionClass::full);
  CHECK(full.scene.instances.size() == 1);
  CHECK(full.occlusion_class == OcclusionClass::full);

  const ScenePlan trunc = sampler.sample_scene(rng, OcclusionClass::truncated);
  CHECK(trunc.scene.instances.size() == 1);
  CHECK(trunc.shifts[0].boundary != trunc.shifts[1].boundary);
  for (const auto& s : trunc.shifts) {
    CHECK(s.fraction >= 0.0);
    CHECK(s.fraction <= 0.3);
  }
}

TEST_CASE("the primary instance sits at the origin with zero yaw") {
  GenConfig cfg;
  cfg.seed = 33;
  SceneSampler sampler(cfg);
  Rng rng(7);
  for (auto cls : {OcclusionClass::full, OcclusionClass::multiObject}) {
    const ScenePlan plan = sampler.sample_scene(rng, cls);
    CHECK(plan.scene.instances[0].placement.yaw == 0.0);
    CHECK(plan.scene.instances[0].placement.translation.norm() == 0.0);
  }
}

TEST_CASE("validation mode draws shapes from the held-out bank") {
  GenConfig cfg;
  cfg.seed = 34;
  cfg.validation = true;
  SceneSampler sampler(cfg);
  const auto& bank = sampler.validation_bank(skelgeom::Category::car);
  REQUIRE(bank.size() == 5);

  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const ScenePlan plan = sampler.sample_scene(rng, OcclusionClass::full);
    bool from_bank = false;
    for (const auto& entry : bank) from_bank = from_bank || entry == plan.params;
    CHECK(from_bank);
  }
}

TEST_CASE("encoded labels are consistent with the plan") {
  GenConfig cfg;
  cfg.seed = 35;
  SceneSampler sampler(cfg);
  Rng rng(9);
  const ScenePlan plan = sampler.sample_scene(rng, OcclusionClass::full);
  const RenderedSample s = render_and_encode(plan, cfg.bins);

  CHECK(s.width == cfg.image_size);
  CHECK(s.height == cfg.image_size);
  CHECK(s.channels == cfg.channels);
  CHECK(s.image.size() ==
        static_cast<std::size_t>(cfg.image_size) * cfg.image_size * cfg.channels);

  // pose one-hot marks the camera azimuth bin
  const skelgeom::AzimuthBinning binning{cfg.bins};
  REQUIRE(s.pose_onehot.size() == static_cast<std::size_t>(cfg.bins));
  int hot = -1;
  for (int j = 0; j < cfg.bins; ++j)
    if (s.pose_onehot[static_cast<std::size_t>(j)] == 1.0f) hot = j;
  CHECK(hot == binning.bin_index(plan.scene.camera.azimuth));

  // keypoints: 2D normalized to [0,1] when visible, 3D in the object frame
  const int K = static_cast<int>(plan.scene.instances[0].model.keypoints.size());
  CHECK(static_cast<int>(s.visibility.size()) == K);
  CHECK(static_cast<int>(s.keypoints_2d.size()) == 2 * K);
  CHECK(static_cast<int>(s.keypoints_3d.size()) == 3 * K);
  for (int k = 0; k < K; ++k) {
    const auto& kp = plan.scene.instances[0].model.keypoints[static_cast<std::size_t>(k)];
    CHECK(s.keypoints_3d[static_cast<std::size_t>(3 * k)] ==
          doctest::Approx(kp.x()).epsilon(1e-6));
    CHECK(s.keypoints_3d[static_cast<std::size_t>(3 * k + 1)] ==
          doctest::Approx(kp.y()).epsilon(1e-6));
    if (s.visibility[static_cast<std::size_t>(k)] == 0) {
      CHECK(s.keypoints_2d[static_cast<std::size_t>(2 * k)] >= 0.0f);
      CHECK(s.keypoints_2d[static_cast<std::size_t>(2 * k)] <= 1.0f);
    }
  }
}

TEST_CASE("render_and_encode is a pure function of the plan") {
  GenConfig cfg;
  cfg.seed = 36;
  SceneSampler sampler(cfg);
  Rng rng(10);
  const ScenePlan plan = sampler.sample_scene(rng, OcclusionClass::truncated);
  const RenderedSample a = render_and_encode(plan, cfg.bins);
  const RenderedSample b = render_and_encode(plan, cfg.bins);
  CHECK(samples_equal(a, b));
}

TEST_CASE("dataset write/read round-trips every field") {
  GenConfig cfg;
  cfg.seed = 37;
  cfg.count = 12;
  const auto dir = temp_dir("disco_ds_rt");
  const DatasetManifest manifest = generate_dataset(cfg, dir.string());
  CHECK(manifest.record_count() == 12);
  CHECK(manifest.class_counts ==
        std::array<std::int64_t, 3>{7, 2, 3});  // 50/20/30 schedule prefix
  CHECK_NOTHROW(manifest.validate());

  const std::vector<RenderedSample> all = read_dataset(dir.string());
  REQUIRE(all.size() == 12);

  const DatasetReader reader(dir.string());
  CHECK(reader.manifest().record_count() == 12);
  for (std::int64_t i = 0; i < 12; ++i)
    CHECK(samples_equal(reader.read(i), all[static_cast<std::size_t>(i)]));

  const DatasetManifest loaded = load_manifest(dir.string());
  CHECK(loaded.offsets == manifest.offsets);
  CHECK(loaded.classes == manifest.classes);
  CHECK(loaded.seed == manifest.seed);
  std::filesystem::remove_all(dir);
}

TEST_CASE("generation is byte-identical for a fixed seed") {
  GenConfig cfg;
  cfg.seed = 38;
  cfg.count = 15;
  const auto a = temp_dir("disco_ds_a");
  const auto b = temp_dir("disco_ds_b");
  generate_dataset(cfg, a.string());
  generate_dataset(cfg, b.string());
  CHECK(slurp(a / "samples.dsc") == slurp(b / "samples.dsc"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  GenConfig other = cfg;
  other.seed = 39;
  const auto c = temp_dir("disco_ds_c");
  generate_dataset(other, c.string());
  CHECK(slurp(a / "samples.dsc") != slurp(c / "samples.dsc"));
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
  std::filesystem::remove_all(c);
}

TEST_CASE("truncated samples remap keypoints through the crop record") {
  GenConfig cfg;
  cfg.seed = 40;
  SceneSampler sampler(cfg);
  Rng rng(12);
  // find a plan with a real crop
  for (int attempt = 0; attempt < 20; ++attempt) {
    const ScenePlan plan = sampler.sample_scene(rng, OcclusionClass::truncated);
    if (plan.shifts[0].fraction < 0.05 && plan.shifts[1].fraction < 0.05) continue;
    const RenderedSample s = render_and_encode(plan, cfg.bins);
    CHECK(s.occlusion_class == OcclusionClass::truncated);
    // the recorded crop reproduces the 2D labels from raw projections
    const auto& inst = plan.scene.instances[0];
    for (std::size_t k = 0; k < inst.model.keypoints.size(); ++k) {
      if (s.visibility[k] != 0) continue;
      skelgeom::Projection proj;
      REQUIRE(skelgeom::try_project(inst.placement.apply(inst.model.keypoints[k]),
                                    plan.scene.camera, proj));
      const Eigen::Vector2d mapped = s.meta.crop.apply(proj.pixel);
      CHECK(s.keypoints_2d[2 * k] ==
            doctest::Approx(mapped.x() / cfg.image_size).epsilon(1e-5));
      CHECK(s.keypoints_2d[2 * k + 1] ==
            doctest::Approx(mapped.y() / cfg.image_size).epsilon(1e-5));
    }
    return;
  }
  FAIL("no truncated plan with a non-trivial crop after 20 attempts");
}
