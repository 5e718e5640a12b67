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

#include <cmath>

#include "disco/datagen/datagen.hpp"
#include "disco/error.hpp"

namespace disco::datagen {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kValBankStream = 0x76616c62616e6bULL;  // "valbank"

// The six unordered pairs of distinct image boundaries.
constexpr std::array<std::array<render::Boundary, 2>, 6> kBoundaryPairs = {{
    {render::Boundary::left, render::Boundary::right},
    {render::Boundary::left, render::Boundary::top},
    {render::Boundary::left, render::Boundary::bottom},
    {render::Boundary::right, render::Boundary::top},
    {render::Boundary::right, render::Boundary::bottom},
    {render::Boundary::top, render::Boundary::bottom},
}};

Eigen::Vector3d random_unit(Rng& rng) {
  for (;;) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

bool keypoints_in_frame(const skelgeom::SkeletonModel& model,
                        const skelgeom::Camera& camera, double margin) {
  for (const auto& kp : model.keypoints) {
    skelgeom::Projection proj;
    if (!skelgeom::try_project(kp, camera, proj)) return false;
    if (proj.pixel.x() < margin || proj.pixel.x() >= camera.width - margin ||
        proj.pixel.y() < margin || proj.pixel.y() >= camera.height - margin)
      return false;
  }
  return true;
}

}  // namespace

const char* occlusion_class_name(OcclusionClass c) {
  switch (c) {
    case OcclusionClass::full: return "full";
    case OcclusionClass::truncated: return "truncated";
    case OcclusionClass::multiObject: return "multiObject";
  }
  return "unknown";
}

int domain_keypoints(Domain domain) {
  return domain == Domain::cars ? skelgeom::keypoint_count(Category::car)
                                : skelgeom::keypoint_count(Category::chair);
}

void GenConfig::validate() const {
  if (count < 0) raise(Errc::ConfigError, "count must be non-negative");
  if (image_size < 8) raise(Errc::ConfigError, "image_size must be at least 8");
  if (channels != 1 && channels != 3)
    raise(Errc::ConfigError, "channels must be 1 or 3");
  if (bins < 2) raise(Errc::ConfigError, "bins must be at least 2");
  if (distance_min <= 1.2 || distance_max < distance_min)
    raise(Errc::ConfigError, "invalid camera distance range");
  if (elevation_max_deg < 0 || elevation_max_deg > 80)
    raise(Errc::ConfigError, "elevation_max_deg out of range");
  if (focal_factor <= 0) raise(Errc::ConfigError, "focal_factor must be positive");
  if (max_attempts < 1) raise(Errc::ConfigError, "max_attempts must be positive");
}

OcclusionClass schedule_class(std::int64_t index) {
  const int slot = static_cast<int>(index % 10);
  if (slot < 5) return OcclusionClass::full;
  if (slot < 7) return OcclusionClass::truncated;
  return OcclusionClass::multiObject;
}

SceneSampler::SceneSampler(const GenConfig& config) : config_(config) {
  config_.validate();
  // Five held-out shapes per category, derived from the seed alone. Training
  // draws fresh continuous parameters, so it never reproduces these vectors.
  for (Category c : {Category::car, Category::chair, Category::sofa}) {
    Rng bank_rng(hash_combine(config_.seed,
                              kValBankStream ^ static_cast<std::uint64_t>(c)));
    auto& bank = val_banks_[static_cast<int>(c)];
    for (int i = 0; i < 5; ++i)
      bank.push_back(skelgeom::sample_params(c, bank_rng));
  }
}

const std::vector<std::vector<double>>& SceneSampler::validation_bank(
    Category c) const {
  return val_banks_[static_cast<int>(c)];
}

std::vector<double> SceneSampler::draw_params(Category category,
                                              Rng& rng) const {
  if (config_.validation) {
    const auto& bank = val_banks_[static_cast<int>(category)];
    return bank[static_cast<std::size_t>(rng.uniform_int(
        static_cast<int>(bank.size())))];
  }
  return skelgeom::sample_params(category, rng);
}

Category SceneSampler::draw_category(Rng& rng) const {
  if (config_.domain == Domain::cars) return Category::car;
  return rng.uniform_int(2) == 0 ? Category::chair : Category::sofa;
}

ScenePlan SceneSampler::sample_scene(Rng& rng, OcclusionClass request) const {
  ScenePlan plan;
  plan.occlusion_class = request;
  plan.category = draw_category(rng);
  plan.params = draw_params(plan.category, rng);
  const skelgeom::BuiltModel built =
      skelgeom::build_model(plan.category, plan.params);

  render::SceneConfig& scene = plan.scene;
  scene.channels = config_.channels;

  render::Instance primary;
  primary.model = built.model;  // origin, zero yaw: object frame == world frame
  if (config_.channels == 3) {
    primary.albedo = {static_cast<float>(rng.uniform(0.35, 0.95)),
                      static_cast<float>(rng.uniform(0.35, 0.95)),
                      static_cast<float>(rng.uniform(0.35, 0.95))};
  } else {
    const float a = static_cast<float>(rng.uniform(0.35, 0.95));
    primary.albedo = {a, a, a};
  }
  scene.instances.push_back(primary);

  // Camera: uniform azimuth, bounded elevation, distance and look-at jitter
  // for apparent size/position variety. The primary's keypoints must project
  // inside the frame (margin 1 px) so a "full" view really is full.
  skelgeom::Camera& cam = scene.camera;
  cam.width = cam.height = config_.image_size;
  cam.focal = config_.focal_factor * config_.image_size;
  cam.principal_point = {config_.image_size / 2.0, config_.image_size / 2.0};
  bool camera_ok = false;
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    cam.azimuth = rng.uniform(0.0, skelgeom::kTwoPi);
    cam.elevation = rng.uniform(0.0, config_.elevation_max_deg * kPi / 180.0);
    cam.distance = rng.uniform(config_.distance_min, config_.distance_max);
    cam.target = {rng.uniform(-config_.target_jitter, config_.target_jitter),
                  rng.uniform(-config_.target_jitter, config_.target_jitter),
                  rng.uniform(-config_.target_jitter, config_.target_jitter)};
    if (keypoints_in_frame(primary.model, cam, 1.0)) {
      camera_ok = true;
      break;
    }
  }
  if (!camera_ok)
    raise(Errc::SamplingExhausted, "no camera kept the object in frame");

  // One directional light, biased toward the camera side so the visible
  // surfaces are usually lit.
  const Eigen::Vector3d to_cam = (cam.position() - cam.target).normalized();
  for (;;) {
    const Eigen::Vector3d l = to_cam + 0.8 * random_unit(rng);
    if (l.norm() > 1e-3) {
      scene.light_dir = l.normalized();
      break;
    }
  }
  scene.light_strength = rng.uniform(0.5, 1.5);

  render::BackgroundSpec& bg = scene.background;
  bg.kind = static_cast<render::BackgroundKind>(rng.uniform_int(4));
  bg.value_a = static_cast<float>(rng.uniform(0.05, 0.95));
  bg.value_b = static_cast<float>(rng.uniform(0.05, 0.95));
  bg.angle = rng.uniform(0.0, skelgeom::kTwoPi);
  bg.checker_size = 3 + rng.uniform_int(8);
  bg.noise_cells = 3 + rng.uniform_int(4);
  bg.seed = rng.next_u64();

  if (request == OcclusionClass::truncated) {
    const auto pair = kBoundaryPairs[static_cast<std::size_t>(rng.uniform_int(6))];
    plan.shifts = {render::BoundaryShift{pair[0], rng.uniform(0.0, 0.3)},
                   render::BoundaryShift{pair[1], rng.uniform(0.0, 0.3)}};
  }

  if (request == OcclusionClass::multiObject) {
    const Category occ_cat = draw_category(rng);
    const skelgeom::BuiltModel occ_built =
        skelgeom::build_model(occ_cat, skelgeom::sample_params(occ_cat, rng));

    render::Instance occluder;
    occluder.model = occ_built.model;
    if (config_.channels == 3) {
      occluder.albedo = {static_cast<float>(rng.uniform(0.35, 0.95)),
                        static_cast<float>(rng.uniform(0.35, 0.95)),
                        static_cast<float>(rng.uniform(0.35, 0.95))};
    } else {
      const float a = static_cast<float>(rng.uniform(0.35, 0.95));
      occluder.albedo = {a, a, a};
    }

    const Eigen::Vector3d cam_pos = cam.position();
    const Eigen::Matrix3d view = cam.world_to_camera();
    const Eigen::Vector3d fwd = -to_cam;  // toward the scene
    const Eigen::Vector3d right = view.row(0).transpose();
    const Eigen::Vector3d down = view.row(1).transpose();

    bool placed = false;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
      occluder.placement.yaw = rng.uniform(0.0, skelgeom::kTwoPi);
      // Between the camera and the primary, offset sideways so it covers
      // part of the silhouette; rejection drives the ratio into [0.4, 0.9].
      const double toward = rng.uniform(0.9, 1.7);
      const double lateral = rng.uniform(-0.85, 0.85);
      const double vertical = rng.uniform(-0.25, 0.25);
      occluder.placement.translation = cam_pos + (cam.distance - toward) * fwd +
                                       lateral * right + vertical * down;

      if (scene.instances.size() == 2)
        scene.instances.pop_back();
      if (render::obb_overlap(render::instance_obb(scene.instances[0]),
                              render::instance_obb(occluder)))
        continue;
      scene.instances.push_back(occluder);
      double ratio;
      try {
        ratio = render::occlusion_ratio(scene, 0);
      } catch (const Error& e) {
        if (e.code() == Errc::ZeroProjection) continue;
        throw;
      }
      if (ratio >= 0.4 && ratio <= 0.9) {
        placed = true;
        break;
      }
    }
    if (!placed)
      raise(Errc::SamplingExhausted,
            "no occluder placement reached the target occlusion ratio");
  }

  return plan;
}

RenderedSample encode_sample(const ScenePlan& plan,
                             const render::FrameBuffer& frame,
                             const render::CropRecord& crop, int bins) {
  const skelgeom::Camera cam = plan.scene.camera.wrapped();
  const skelgeom::SkeletonModel& model = plan.scene.instances[0].model;
  const int k = model.keypoint_count();

  RenderedSample s;
  s.width = static_cast<std::uint16_t>(frame.width);
  s.height = static_cast<std::uint16_t>(frame.height);
  s.channels = static_cast<std::uint16_t>(frame.channels);
  s.image.resize(frame.color.size());
  for (std::size_t i = 0; i < frame.color.size(); ++i)
    s.image[i] = static_cast<std::uint8_t>(
        std::lround(std::clamp(frame.color[i], 0.f, 1.f) * 255.f));

  s.pose_onehot = skelgeom::azimuth_to_onehot(cam.azimuth, {bins});

  // Ray-traced visibility on the uncropped scene, then crop-out handling:
  // a keypoint whose remapped pixel leaves the frame counts as occluded. The
  // (possibly out-of-frame) 2D coordinate is kept as the regression target.
  s.visibility = render::keypoint_visibility(plan.scene, model.keypoints);
  s.keypoints_2d.resize(static_cast<std::size_t>(2 * k));
  s.keypoints_3d.resize(static_cast<std::size_t>(3 * k));
  for (int i = 0; i < k; ++i) {
    const skelgeom::Projection proj = skelgeom::project(model.keypoints[i], cam);
    const Eigen::Vector2d remapped = crop.apply(proj.pixel);
    if (remapped.x() < 0.0 || remapped.x() >= frame.width ||
        remapped.y() < 0.0 || remapped.y() >= frame.height)
      s.visibility[static_cast<std::size_t>(i)] = 1;
    s.keypoints_2d[static_cast<std::size_t>(2 * i)] =
        static_cast<float>(remapped.x() / frame.width);
    s.keypoints_2d[static_cast<std::size_t>(2 * i + 1)] =
        static_cast<float>(remapped.y() / frame.height);
    for (int d = 0; d < 3; ++d)
      s.keypoints_3d[static_cast<std::size_t>(3 * i + d)] =
          static_cast<float>(model.keypoints[static_cast<std::size_t>(i)][d]);
  }

  s.occlusion_class = plan.occlusion_class;
  s.meta.category = plan.category;
  s.meta.camera = cam;
  s.meta.crop = crop;
  s.meta.params = plan.params;
  s.meta.seed = plan.seed;
  return s;
}

RenderedSample render_and_encode(const ScenePlan& plan, int bins) {
  render::FrameBuffer frame = render::rasterize(plan.scene);
  render::CropRecord crop;
  if (plan.occlusion_class == OcclusionClass::truncated) {
    render::TruncateResult t = render::truncate(frame, plan.shifts);
    frame = std::move(t.frame);
    crop = t.crop;
  }
  frame = render::composite_background(frame, plan.scene.background);
  return encode_sample(plan, frame, crop, bins);
}

DatasetManifest generate_dataset(const GenConfig& config,
                                 const std::string& out_dir) {
  config.validate();
  const SceneSampler sampler(config);

  std::vector<RenderedSample> samples;
  samples.reserve(static_cast<std::size_t>(config.count));
  for (std::int64_t i = 0; i < config.count; ++i) {
    const std::uint64_t seed_i = hash_combine(config.seed, static_cast<std::uint64_t>(i));
    Rng rng(seed_i);
    const OcclusionClass cls = schedule_class(i);
    ScenePlan plan;
    bool ok = false;
    for (int retry = 0; retry < 20 && !ok; ++retry) {
      try {
        plan = sampler.sample_scene(rng, cls);
        ok = true;
      } catch (const Error& e) {
        if (e.code() != Errc::SamplingExhausted || retry == 19) throw;
      }
    }
    plan.seed = seed_i;
    samples.push_back(render_and_encode(plan, config.bins));
  }

  DatasetHeader header;
  header.bins = config.bins;
  header.keypoints = domain_keypoints(config.domain);
  header.width = header.height = config.image_size;
  header.channels = config.channels;
  header.seed = config.seed;
  return write_dataset(samples, out_dir, header);
}

}  // namespace disco::datagen
