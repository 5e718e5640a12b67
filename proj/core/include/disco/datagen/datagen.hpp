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
#include <fstream>
#include <string>
#include <vector>

#include "disco/render/render.hpp"
#include "disco/rng.hpp"
#include "disco/skelgeom/camera.hpp"
#include "disco/skelgeom/model.hpp"
#include "disco/skelgeom/procedural.hpp"

namespace disco::datagen {

using skelgeom::Category;

enum class OcclusionClass : std::uint8_t { full = 0, truncated = 1, multiObject = 2 };

const char* occlusion_class_name(OcclusionClass c);

/// A dataset covers one training domain of the paper: cars, or the
/// chair+sofa furniture mix. The domain fixes the keypoint count K.
enum class Domain : std::uint8_t { cars = 0, furniture = 1 };

int domain_keypoints(Domain domain);

struct SampleMeta {
  Category category = Category::car;
  skelgeom::Camera camera;        // width/height match the image
  render::CropRecord crop;        // identity when the sample is not truncated
  std::vector<double> params;     // primary-instance procedural parameters
  std::uint64_t seed = 0;         // per-sample RNG seed
};

/// One labeled training example. The image is kept quantized (u8) so the
/// serialized form round-trips bitwise; training divides by 255 on load.
struct RenderedSample {
  std::uint16_t width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> image;      // H*W*C
  std::vector<float> pose_onehot;       // M entries, exactly one 1
  std::vector<std::uint8_t> visibility; // K entries, 1 = occluded
  std::vector<float> keypoints_2d;      // 2K, (x,y) normalized to [0,1]
  std::vector<float> keypoints_3d;      // 3K, normalized object frame
  OcclusionClass occlusion_class = OcclusionClass::full;
  SampleMeta meta;
};

struct GenConfig {
  Domain domain = Domain::cars;
  std::int64_t count = 0;
  int image_size = 32;
  int channels = 1;
  int bins = 24;  // azimuth bins M
  std::uint64_t seed = 0;
  /// Validation sets draw shapes from a bank of 5 held-out parameter
  /// vectors per category instead of fresh random shapes.
  bool validation = false;

  double distance_min = 2.6, distance_max = 4.2;
  double elevation_max_deg = 30.0;
  double focal_factor = 1.875;   // focal = focal_factor * image_size
  double target_jitter = 0.12;   // look-at jitter, world units
  int max_attempts = 64;         // placement attempts per sample_scene call

  void validate() const;
};

/// Everything needed to render and label one sample. `scene` places the
/// primary (labeled) instance at the origin with zero yaw, so its object
/// frame coincides with the world frame.
struct ScenePlan {
  render::SceneConfig scene;
  OcclusionClass occlusion_class = OcclusionClass::full;
  std::array<render::BoundaryShift, 2> shifts{};  // truncated class only
  Category category = Category::car;
  std::vector<double> params;
  std::uint64_t seed = 0;
};

/// Deterministic 50/20/30 interleave of full/truncated/multiObject.
OcclusionClass schedule_class(std::int64_t index);

class SceneSampler {
 public:
  explicit SceneSampler(const GenConfig& config);

  /// Draws a scene for the requested occlusion class. For multiObject the
  /// placement is resampled until the primary's visible fraction lands in
  /// [0.4, 0.9]; after max_attempts the call throws SamplingExhausted and
  /// the caller retries with freshly drawn instances.
  ScenePlan sample_scene(Rng& rng, OcclusionClass request) const;

  const std::vector<std::vector<double>>& validation_bank(Category c) const;

 private:
  std::vector<double> draw_params(Category category, Rng& rng) const;
  Category draw_category(Rng& rng) const;

  GenConfig config_;
  std::array<std::vector<std::vector<double>>, 3> val_banks_;  // by Category
};

/// Labels a rendered (and possibly truncated/composited) frame.
RenderedSample encode_sample(const ScenePlan& plan,
                             const render::FrameBuffer& frame,
                             const render::CropRecord& crop, int bins);

/// Full per-sample pipeline: rasterize, truncate (if requested), composite
/// the background, and encode labels.
RenderedSample render_and_encode(const ScenePlan& plan, int bins);

struct DatasetManifest {
  int schema_version = 1;
  int bins = 0;       // M
  int keypoints = 0;  // K
  int width = 0, height = 0, channels = 0;
  std::uint64_t seed = 0;
  std::array<std::int64_t, 3> class_counts{0, 0, 0};     // by OcclusionClass
  std::array<std::int64_t, 3> category_counts{0, 0, 0};  // by Category
  std::vector<std::uint64_t> offsets;    // per record, into samples.dsc
  std::vector<std::uint8_t> classes;     // per record
  std::vector<std::uint8_t> categories;  // per record

  std::int64_t record_count() const { return static_cast<std::int64_t>(offsets.size()); }
  void validate() const;
};

/// Writes dir/samples.dsc + dir/manifest.json. `header` supplies the fields
/// that cannot be derived from an empty sample list.
struct DatasetHeader {
  int bins = 0, keypoints = 0;
  int width = 0, height = 0, channels = 0;
  std::uint64_t seed = 0;
};

DatasetManifest write_dataset(const std::vector<RenderedSample>& samples,
                              const std::string& dir,
                              const DatasetHeader& header);

std::vector<RenderedSample> read_dataset(const std::string& dir);

/// Random-access reader over samples.dsc using the manifest offsets.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& dir);
  ~DatasetReader();
  DatasetReader(const DatasetReader&) = delete;
  DatasetReader& operator=(const DatasetReader&) = delete;

  const DatasetManifest& manifest() const { return manifest_; }
  RenderedSample read(std::int64_t index) const;

 private:
  DatasetManifest manifest_;
  std::string data_path_;
  mutable std::ifstream stream_;
};

DatasetManifest load_manifest(const std::string& dir);

/// Generates `config.count` samples (seed-deterministic, per-sample seed =
/// hash(config.seed, index)) and writes them under out_dir.
DatasetManifest generate_dataset(const GenConfig& config,
                                 const std::string& out_dir);

}  // namespace disco::datagen
