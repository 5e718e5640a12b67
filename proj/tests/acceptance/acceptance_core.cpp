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

// Release gates for the geometry, sampling, metric, and serialization layers.
// Every gate prints exactly one [PASS] line; the first failure aborts the
// binary with a [FAIL] line and a nonzero exit.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "disco/datagen/datagen.hpp"
#include "disco/error.hpp"
#include "disco/eval/metrics.hpp"
#include "disco/eval/shapefit.hpp"
#include "disco/net/network.hpp"
#include "disco/net/trainer.hpp"
#include "disco/render/render.hpp"
#include "disco/rng.hpp"
#include "disco/skelgeom/camera.hpp"
#include "disco/skelgeom/procedural.hpp"

namespace {

#define REQUIRE(cond, msg)                                                   \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg    \
                << "\n";                                                     \
      std::exit(1);                                                          \
    }                                                                        \
  } while (0)

using namespace disco;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::filesystem::path scratch_dir(const char* name) {
  const auto dir =
      std::filesystem::temp_directory_path() / "disco_acceptance" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good(), "cannot open " << p);
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Ray-tracing oracle pieces (Moeller-Trumbore, written independently of the
// rasterizer).
// ---------------------------------------------------------------------------

struct RayHit {
  double t = std::numeric_limits<double>::infinity();
  double u = 0.0, v = 0.0;
  bool hit = false;
};

RayHit ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                    const skelgeom::Triangle& tri) {
  RayHit out;
  const Eigen::Vector3d e1 = tri[1] - tri[0];
  const Eigen::Vector3d e2 = tri[2] - tri[0];
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return out;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = origin - tri[0];
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return out;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return out;
  const double t = e2.dot(q) * inv;
  if (t <= 0.0) return out;
  out.t = t;
  out.u = u;
  out.v = v;
  out.hit = true;
  return out;
}

// Direction through a pixel center whose forward component is 1, so the ray
// parameter equals the camera-frame depth the rasterizer stores.
Eigen::Vector3d pixel_direction(const skelgeom::Camera& cam, int x, int y) {
  const Eigen::Matrix3d rot = cam.world_to_camera();
  const Eigen::Vector3d local(
      (static_cast<double>(x) + 0.5 - cam.principal_point.x()) / cam.focal,
      (static_cast<double>(y) + 0.5 - cam.principal_point.y()) / cam.focal,
      1.0);
  return rot.transpose() * local;
}

struct PixelWinner {
  int instance = 0;  // 0 = background, 1-based otherwise
  double depth = std::numeric_limits<double>::infinity();
  double runner_up = std::numeric_limits<double>::infinity();
  double edge_margin = 1.0;  // min barycentric coordinate of the winning hit
};

PixelWinner trace_pixel(const render::SceneConfig& scene,
                        const std::vector<std::vector<skelgeom::Triangle>>& tris,
                        int x, int y) {
  const Eigen::Vector3d origin = scene.camera.position();
  const Eigen::Vector3d dir = pixel_direction(scene.camera, x, y);
  PixelWinner w;
  for (std::size_t k = 0; k < tris.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    double margin = 1.0;
    for (const skelgeom::Triangle& tri : tris[k]) {
      const RayHit hit = ray_triangle(origin, dir, tri);
      if (hit.hit && hit.t > 1e-6 && hit.t < best) {
        best = hit.t;
        margin = std::min({hit.u, hit.v, 1.0 - hit.u - hit.v});
      }
    }
    if (best < w.depth) {
      w.runner_up = w.depth;
      w.depth = best;
      w.instance = static_cast<int>(k) + 1;
      w.edge_margin = margin;
    } else if (best < w.runner_up) {
      w.runner_up = best;
    }
  }
  return w;
}

std::uint8_t oracle_point_occluded(const render::SceneConfig& scene,
                                   const Eigen::Vector3d& point) {
  skelgeom::Projection proj;
  if (!skelgeom::try_project(point, scene.camera, proj)) return 1;
  if (proj.pixel.x() < 0.0 ||
      proj.pixel.x() >= static_cast<double>(scene.camera.width) ||
      proj.pixel.y() < 0.0 ||
      proj.pixel.y() >= static_cast<double>(scene.camera.height))
    return 1;

  const Eigen::Vector3d origin = scene.camera.position();
  const Eigen::Vector3d dir = point - origin;
  const double len = dir.norm();
  const double t_limit = 1.0 - render::kVisibilityTolerance / len;
  for (const render::Instance& inst : scene.instances) {
    for (const skelgeom::Triangle& tri : render::instance_world_triangles(inst)) {
      const RayHit hit = ray_triangle(origin, dir, tri);
      if (hit.hit && hit.t < t_limit) return 1;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Metric oracles (brute force, no shortcuts shared with the library).
// ---------------------------------------------------------------------------

double oracle_pck2d(const eval::Samples2d& pred, const eval::Samples2d& gt,
                    const eval::SamplesFlag& occ, double alpha, double length) {
  std::int64_t vis = 0, hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t k = 0; k < pred[i].size(); ++k) {
      if (occ[i][k]) continue;
      ++vis;
      if ((pred[i][k] - gt[i][k]).norm() <= alpha * length) ++hit;
    }
  return static_cast<double>(hit) / static_cast<double>(vis);
}

double oracle_pck3d(const eval::Samples3d& pred, const eval::Samples3d& gt,
                    double alpha) {
  std::int64_t total = 0, hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t k = 0; k < pred[i].size(); ++k) {
      ++total;
      if ((pred[i][k] - gt[i][k]).norm() < alpha) ++hit;
    }
  return static_cast<double>(hit) / static_cast<double>(total);
}

double oracle_apk(const eval::Samples2d& pred, const eval::SamplesScore& conf,
                  const eval::Samples2d& gt, const eval::SamplesFlag& occ,
                  double alpha, double length) {
  const std::size_t types = pred.front().size();
  const double radius = alpha * length;
  double sum = 0.0;
  int scored = 0;
  for (std::size_t k = 0; k < types; ++k) {
    std::int64_t positives = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (!occ[i][k]) ++positives;
    if (positives == 0) continue;

    std::vector<std::size_t> order(pred.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (conf[a][k] != conf[b][k]) return conf[a][k] > conf[b][k];
      return a < b;
    });

    std::vector<double> prec(order.size());
    std::vector<bool> tp(order.size());
    std::int64_t hits = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t i = order[r];
      tp[r] = !occ[i][k] && (pred[i][k] - gt[i][k]).norm() <= radius;
      if (tp[r]) ++hits;
      prec[r] = static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    double ap = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (!tp[r]) continue;
      double best = 0.0;
      for (std::size_t j = r; j < order.size(); ++j)
        best = std::max(best, prec[j]);
      ap += best / static_cast<double>(positives);
    }
    sum += ap;
    ++scored;
  }
  return sum / static_cast<double>(scored);
}

std::vector<Eigen::Vector3d> oracle_align(
    const std::vector<Eigen::Vector3d>& pred,
    const std::vector<Eigen::Vector3d>& gt) {
  const auto centroid = [](const std::vector<Eigen::Vector3d>& pts) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : pts) c += p;
    return Eigen::Vector3d(c / static_cast<double>(pts.size()));
  };
  const auto axes_of = [](const std::vector<Eigen::Vector3d>& pts,
                          const Eigen::Vector3d& c) {
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    return Eigen::Matrix3d(es.eigenvectors());
  };

  const Eigen::Vector3d cp = centroid(pred), cg = centroid(gt);
  const Eigen::Matrix3d up = axes_of(pred, cp), ug = axes_of(gt, cg);

  double best_err = std::numeric_limits<double>::infinity();
  Eigen::Matrix3d best = Eigen::Matrix3d::Identity();
  for (int mask = 0; mask < 8; ++mask) {
    Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
    for (int a = 0; a < 3; ++a)
      if (mask & (1 << a)) s(a, a) = -1.0;
    const Eigen::Matrix3d rot = ug * s * up.transpose();
    if (rot.determinant() < 0) continue;
    double err = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      err += (cp + rot * (pred[i] - cp) - gt[i]).squaredNorm();
    if (err < best_err) {
      best_err = err;
      best = rot;
    }
  }
  std::vector<Eigen::Vector3d> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    out[i] = cp + best * (pred[i] - cp);
  return out;
}

double oracle_average_recall(const eval::Samples3d& pred,
                             const eval::Samples3d& gt) {
  std::vector<double> distances;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto aligned = oracle_align(pred[i], gt[i]);
    for (std::size_t k = 0; k < aligned.size(); ++k)
      distances.push_back((aligned[k] - gt[i][k]).norm());
  }
  double sum = 0.0;
  for (int step = 1; step <= 100; ++step) {
    const double alpha = static_cast<double>(step) / 100.0;
    std::int64_t ok = 0;
    for (double d : distances)
      if (d < alpha) ++ok;
    sum += static_cast<double>(ok) / static_cast<double>(distances.size());
  }
  return sum / 100.0;
}

// ---------------------------------------------------------------------------
// Gate: rasterizer versus ray tracer.
// ---------------------------------------------------------------------------

void gate_raster_vs_ray() {
  const auto start = Clock::now();

  datagen::GenConfig cfg;
  cfg.image_size = 32;
  cfg.seed = 424242;
  const datagen::SceneSampler sampler(cfg);
  Rng rng(hash_combine(cfg.seed, 0x72617374ULL));

  std::int64_t considered = 0, agreed = 0, skipped = 0;
  std::int64_t vis_points = 0;
  const int scenes = 100;
  for (int s = 0; s < scenes; ++s) {
    const datagen::ScenePlan plan =
        sampler.sample_scene(rng, datagen::OcclusionClass::multiObject);
    const render::SceneConfig& scene = plan.scene;
    REQUIRE(scene.instances.size() == 2,
            "multi-object plan must hold two instances");
    const render::FrameBuffer fb = render::rasterize(scene);

    std::vector<std::vector<skelgeom::Triangle>> tris;
    for (const render::Instance& inst : scene.instances)
      tris.push_back(render::instance_world_triangles(inst));

    for (int y = 0; y < fb.height; ++y) {
      for (int x = 0; x < fb.width; ++x) {
        const PixelWinner w = trace_pixel(scene, tris, x, y);
        // Shared-edge ties: a depth tie between instances or a hit running
        // along a triangle edge can legitimately land either way.
        if (w.instance != 0 &&
            (w.runner_up - w.depth < 1e-6 || w.edge_margin < 1e-9)) {
          ++skipped;
          continue;
        }
        ++considered;
        if (fb.instance_id[static_cast<std::size_t>(y) * fb.width + x] ==
            w.instance)
          ++agreed;
      }
    }

    // Keypoint visibility must match the exhaustive oracle bit for bit.
    for (const render::Instance& inst : scene.instances) {
      std::vector<Eigen::Vector3d> world;
      for (const Eigen::Vector3d& kp : inst.model.keypoints)
        world.push_back(inst.placement.apply(kp));
      const std::vector<std::uint8_t> flags =
          render::keypoint_visibility(scene, world);
      REQUIRE(flags.size() == world.size(), "visibility size mismatch");
      for (std::size_t i = 0; i < world.size(); ++i) {
        const std::uint8_t want = oracle_point_occluded(scene, world[i]);
        REQUIRE(flags[i] == want,
                "keypoint visibility disagrees with the ray oracle (scene "
                    << s << ", keypoint " << i << ")");
        ++vis_points;
      }
    }
  }

  const double ratio =
      static_cast<double>(agreed) / static_cast<double>(considered);
  const double elapsed = seconds_since(start);
  REQUIRE(ratio >= 0.999, "winner agreement " << ratio << " below 0.999");
  REQUIRE(elapsed < 60.0, "raster/ray gate took " << elapsed << "s (>60s)");
  std::cout << "[PASS] criterion 2: raster/ray winner agreement "
            << 100.0 * ratio << "% on " << considered << " pixels ("
            << skipped << " tie pixels excluded), keypoint visibility exact on "
            << vis_points << " points, " << elapsed << "s\n";
}

// ---------------------------------------------------------------------------
// Gate: occlusion-aware sampling.
// ---------------------------------------------------------------------------

void gate_occlusion_sampling() {
  const auto start = Clock::now();

  // The deterministic class schedule: every full window of ten requests is
  // 5 full / 2 truncated / 3 multi-object, and a 500-sample batch lands on
  // the 50/20/30 mix exactly.
  std::array<std::int64_t, 3> counts{};
  std::array<std::int64_t, 3> prev{};
  for (std::int64_t i = 0; i < 1000; ++i) {
    ++counts[static_cast<std::size_t>(datagen::schedule_class(i))];
    if ((i + 1) % 10 == 0) {
      const std::array<std::int64_t, 3> window{
          counts[0] - prev[0], counts[1] - prev[1], counts[2] - prev[2]};
      REQUIRE(window[0] == 5 && window[1] == 2 && window[2] == 3,
              "schedule window at " << i << " is not 5/2/3");
      prev = counts;
    }
    if (i + 1 == 500)
      REQUIRE(counts[0] == 250 && counts[1] == 100 && counts[2] == 150,
              "500-sample schedule is not 250/100/150");
  }
  REQUIRE(counts[0] == 500 && counts[1] == 200 && counts[2] == 300,
          "1000-sample schedule is not 500/200/300");

  datagen::GenConfig cfg;
  cfg.image_size = 32;
  cfg.seed = 31337;
  const datagen::SceneSampler sampler(cfg);
  Rng rng(hash_combine(cfg.seed, 0x6f63636cULL));

  double lo = 1.0, hi = 0.0;
  const int samples = 500;
  for (int i = 0; i < samples; ++i) {
    const datagen::ScenePlan plan =
        sampler.sample_scene(rng, datagen::OcclusionClass::multiObject);
    const double visible = render::occlusion_ratio(plan.scene, 0);
    REQUIRE(visible >= 0.4 - 1e-9 && visible <= 0.9 + 1e-9,
            "accepted sample " << i << " has visible fraction " << visible);
    lo = std::min(lo, visible);
    hi = std::max(hi, visible);
  }

  std::cout << "[PASS] criterion 3: " << samples
            << " accepted multi-object samples re-measure inside [0.4, 0.9] "
               "(observed ["
            << lo << ", " << hi << "]), class schedule exact, "
            << seconds_since(start) << "s\n";
}

// ---------------------------------------------------------------------------
// Gate: metric implementations against brute force.
// ---------------------------------------------------------------------------

void gate_metric_oracles() {
  const auto start = Clock::now();
  Rng rng(0x6d657472ULL);
  const auto rand2 = [&](double lo, double hi) {
    return Eigen::Vector2d(rng.uniform(lo, hi), rng.uniform(lo, hi));
  };
  const auto rand3 = [&](double lo, double hi) {
    return Eigen::Vector3d(rng.uniform(lo, hi), rng.uniform(lo, hi),
                           rng.uniform(lo, hi));
  };

  int cases = 0;

  for (int trial = 0; trial < 400; ++trial, ++cases) {
    const std::size_t n = 1 + rng.uniform_int(7);
    const std::size_t k = 1 + rng.uniform_int(9);
    eval::Samples2d pred(n), gt(n);
    eval::SamplesFlag occ(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        gt[i].push_back(rand2(0, 32));
        pred[i].push_back(gt[i][j] + rand2(-6, 6));
        occ[i].push_back(rng.uniform() < 0.3 ? 1 : 0);
        any = any || occ[i][j] == 0;
      }
    if (!any) occ[0][0] = 0;
    const double alpha = rng.uniform(0.02, 0.5);
    const double got = eval::pck_2d(pred, gt, occ, {alpha, 32.0});
    const double want = oracle_pck2d(pred, gt, occ, alpha, 32.0);
    REQUIRE(std::abs(got - want) < 1e-9,
            "pck_2d " << got << " vs oracle " << want);
  }

  for (int trial = 0; trial < 300; ++trial, ++cases) {
    const std::size_t n = 2 + rng.uniform_int(7);
    const std::size_t k = 1 + rng.uniform_int(5);
    eval::Samples2d pred(n), gt(n);
    eval::SamplesScore conf(n);
    eval::SamplesFlag occ(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        gt[i].push_back(rand2(0, 32));
        pred[i].push_back(gt[i][j] + rand2(-5, 5));
        conf[i].push_back(rng.uniform());
        occ[i].push_back(rng.uniform() < 0.35 ? 1 : 0);
        any = any || occ[i][j] == 0;
      }
    if (!any) occ[0][0] = 0;
    const double alpha = rng.uniform(0.05, 0.4);
    const double got = eval::apk(pred, conf, gt, occ, {alpha, 32.0});
    const double want = oracle_apk(pred, conf, gt, occ, alpha, 32.0);
    REQUIRE(std::abs(got - want) < 1e-9,
            "apk " << got << " vs oracle " << want);
  }

  for (int trial = 0; trial < 200; ++trial, ++cases) {
    const std::size_t n = 1 + rng.uniform_int(6);
    const std::size_t k = 1 + rng.uniform_int(11);
    eval::Samples3d pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        gt[i].push_back(rand3(-1, 1));
        pred[i].push_back(gt[i][j] + rand3(-0.3, 0.3));
      }
    const double alpha = rng.uniform(0.01, 0.6);
    const double got = eval::pck_3d(pred, gt, alpha);
    const double want = oracle_pck3d(pred, gt, alpha);
    REQUIRE(std::abs(got - want) < 1e-9,
            "pck_3d " << got << " vs oracle " << want);
  }

  for (int trial = 0; trial < 100; ++trial, ++cases) {
    eval::Samples3d pred(4), gt(4);
    for (std::size_t i = 0; i < 4; ++i)
      for (int j = 0; j < 9; ++j) {
        // Anisotropic spread keeps the principal axes well separated.
        gt[i].push_back(Eigen::Vector3d(rng.uniform(-1.0, 1.0),
                                        rng.uniform(-0.55, 0.55),
                                        rng.uniform(-0.25, 0.25)));
        pred[i].push_back(gt[i].back() + rand3(-0.2, 0.2));
      }
    const double got = eval::average_recall(pred, gt);
    const double want = oracle_average_recall(pred, gt);
    REQUIRE(std::abs(got - want) < 1e-9,
            "average_recall " << got << " vs oracle " << want);
  }

  // Monotonicity of PCK in alpha.
  {
    eval::Samples2d pred(30), gt(30);
    eval::SamplesFlag occ(30);
    for (std::size_t i = 0; i < 30; ++i)
      for (int j = 0; j < 10; ++j) {
        gt[i].push_back(rand2(0, 32));
        pred[i].push_back(gt[i].back() + rand2(-10, 10));
        occ[i].push_back(0);
      }
    double prev = -1.0;
    for (int step = 1; step <= 100; ++step) {
      const double v =
          eval::pck_2d(pred, gt, occ, {static_cast<double>(step) / 100.0, 32.0});
      REQUIRE(v >= prev, "pck_2d decreased between alpha steps at " << step);
      prev = v;
    }
  }

  std::cout << "[PASS] criterion 7: PCK/APK/3D-PCK/average-recall match brute "
               "force to 1e-9 on "
            << cases << " randomized cases; PCK monotone in alpha; "
            << seconds_since(start) << "s\n";
}

// ---------------------------------------------------------------------------
// Gate: shape-model fitting.
// ---------------------------------------------------------------------------

void gate_pca_fit() {
  const auto start = Clock::now();
  constexpr double kPi = 3.14159265358979323846;

  int good = 0;
  const int trials = 200;
  double worst_az_err = 0.0;
  Rng rng(0x70636166ULL);
  for (int block = 0; block < 4; ++block) {
    // A fresh shape model per block, built from procedurally sampled cars.
    std::vector<std::vector<Eigen::Vector3d>> shapes;
    for (int i = 0; i < 16; ++i) {
      const auto params = skelgeom::sample_params(skelgeom::Category::car, rng);
      shapes.push_back(
          skelgeom::build_model(skelgeom::Category::car, params).model.keypoints);
    }
    const eval::PcaShapeModel model = eval::build_pca_model(shapes, 4);

    skelgeom::Camera intrinsics;
    intrinsics.width = 64;
    intrinsics.height = 64;
    intrinsics.focal = 120.0;
    intrinsics.principal_point = {32.0, 32.0};
    intrinsics.target = Eigen::Vector3d::Zero();

    for (int t = 0; t < trials / 4; ++t) {
      Eigen::VectorXd coeffs(model.component_count());
      for (int b = 0; b < model.component_count(); ++b)
        coeffs(b) = rng.uniform(-0.6, 0.6) *
                    model.coeff_bounds[static_cast<std::size_t>(b)];
      const auto shape = model.shape(coeffs);

      skelgeom::Camera cam = intrinsics;
      cam.azimuth = rng.uniform(0.0, 2.0 * kPi);
      cam.elevation = rng.uniform(0.0, 35.0 * kPi / 180.0);
      cam.distance = rng.uniform(2.0, 4.5);

      std::vector<Eigen::Vector2d> landmarks;
      for (const auto& p : shape)
        landmarks.push_back(skelgeom::project(p, cam).pixel);
      const std::vector<std::uint8_t> occ(shape.size(), 0);

      const eval::PcaFitResult fit =
          eval::fit_pca_to_2d(landmarks, occ, model, intrinsics);

      const double az_err =
          std::abs(std::remainder(fit.azimuth - cam.azimuth, 2.0 * kPi));
      double coeff_err = 0.0;
      for (int b = 0; b < model.component_count(); ++b)
        coeff_err =
            std::max(coeff_err, std::abs(fit.coefficients(b) - coeffs(b)));
      if (az_err < kPi / 180.0 && coeff_err < 1e-2) {
        ++good;
        worst_az_err = std::max(worst_az_err, az_err);
      }
    }
  }

  REQUIRE(good >= 190, "only " << good << "/200 noiseless fits recovered the "
                               "pose and coefficients");
  std::cout << "[PASS] criterion 8: noiseless landmark fits recover pose "
               "within 1 degree and coefficients within 1e-2 on "
            << good << "/200 trials, " << seconds_since(start) << "s\n";
}

// ---------------------------------------------------------------------------
// Gate: serialization.
// ---------------------------------------------------------------------------

void gate_serialization() {
  const auto start = Clock::now();

  datagen::GenConfig cfg;
  cfg.count = 40;
  cfg.image_size = 32;
  cfg.seed = 777;

  const auto dir_a = scratch_dir("ser_a");
  const auto dir_b = scratch_dir("ser_b");
  const datagen::DatasetManifest mani_a =
      datagen::generate_dataset(cfg, dir_a.string());
  datagen::generate_dataset(cfg, dir_b.string());

  REQUIRE(file_bytes(dir_a / "samples.dsc") == file_bytes(dir_b / "samples.dsc"),
          "same-seed dataset payloads differ");
  REQUIRE(file_bytes(dir_a / "manifest.json") ==
              file_bytes(dir_b / "manifest.json"),
          "same-seed dataset manifests differ");

  // Read-write round trip reproduces the files bit for bit.
  const std::vector<datagen::RenderedSample> samples =
      datagen::read_dataset(dir_a.string());
  REQUIRE(samples.size() == 40, "read_dataset returned the wrong count");
  const auto dir_c = scratch_dir("ser_c");
  datagen::DatasetHeader header;
  header.bins = mani_a.bins;
  header.keypoints = mani_a.keypoints;
  header.width = mani_a.width;
  header.height = mani_a.height;
  header.channels = mani_a.channels;
  header.seed = mani_a.seed;
  datagen::write_dataset(samples, dir_c.string(), header);
  REQUIRE(file_bytes(dir_a / "samples.dsc") == file_bytes(dir_c / "samples.dsc"),
          "dataset payload changed across a read-write round trip");
  REQUIRE(file_bytes(dir_a / "manifest.json") ==
              file_bytes(dir_c / "manifest.json"),
          "dataset manifest changed across a read-write round trip");

  // Checkpoint round trip on the full network, with exercised BN statistics.
  net::NetworkConfig ncfg = net::make_variant("disco");
  net::Network<float> trained(ncfg, 4242);
  {
    const datagen::DatasetReader reader(dir_a.string());
    std::vector<std::int64_t> idx(8);
    std::iota(idx.begin(), idx.end(), std::int64_t{0});
    const net::BatchData<float> batch = net::load_batch<float>(reader, idx);
    std::map<std::string, net::Tensor<float>> vel;
    for (int i = 0; i < 2; ++i)
      net::training_step(trained, batch, vel,
                         net::StepConfig{0.01, 0.9, 1e-4,
                                         static_cast<std::uint64_t>(i)});
  }
  const auto ckpt_a = (scratch_dir("ser_ckpt") / "a.dscw").string();
  trained.save_checkpoint(ckpt_a);

  net::Network<float> restored(ncfg, 9999);
  restored.load_checkpoint(ckpt_a);
  const std::string ckpt_b = ckpt_a + ".rewrite";
  restored.save_checkpoint(ckpt_b);
  REQUIRE(file_bytes(ckpt_a) == file_bytes(ckpt_b),
          "checkpoint changed across a load-save round trip");

  std::cout << "[PASS] criterion 9: dataset and checkpoint serialization "
               "round-trip bitwise; fixed seed reproduces dataset bytes; "
            << seconds_since(start) << "s\n";
}

// ---------------------------------------------------------------------------
// Gate: skeleton masks versus rendered silhouettes.
// ---------------------------------------------------------------------------

void gate_segmentation() {
  const auto start = Clock::now();

  datagen::GenConfig cfg;
  cfg.image_size = 64;
  cfg.seed = 515151;
  const datagen::SceneSampler sampler(cfg);
  Rng rng(hash_combine(cfg.seed, 0x7365676dULL));

  double iou_sum = 0.0;
  int scored = 0;
  const int scenes = 100;
  for (int s = 0; s < scenes; ++s) {
    const datagen::ScenePlan plan =
        sampler.sample_scene(rng, datagen::OcclusionClass::full);
    const render::SceneConfig& scene = plan.scene;
    const render::Instance& inst = scene.instances.front();
    const render::FrameBuffer fb = render::rasterize(scene);

    eval::Mask rendered;
    rendered.size = fb.width;
    rendered.data.assign(static_cast<std::size_t>(fb.width) * fb.height, 0);
    for (std::size_t i = 0; i < rendered.data.size(); ++i)
      rendered.data[i] = fb.instance_id[i] == 1 ? 1 : 0;

    std::vector<Eigen::Vector2d> kp2d;
    for (const Eigen::Vector3d& kp : inst.model.keypoints)
      kp2d.push_back(
          skelgeom::project(inst.placement.apply(kp), scene.camera).pixel);
    const eval::Mask skeleton =
        eval::skeleton_to_mask(kp2d, inst.model.faces, fb.width);

    iou_sum += eval::iou(skeleton, rendered);
    ++scored;
  }

  const double mean_iou = iou_sum / static_cast<double>(scored);
  REQUIRE(mean_iou >= 0.75, "mean skeleton/silhouette IoU " << mean_iou
                                                            << " below 0.75");
  std::cout << "[PASS] criterion 10: mean IoU between ground-truth skeleton "
               "masks and rendered silhouettes is "
            << mean_iou << " over " << scored << " car scenes, "
            << seconds_since(start) << "s\n";
}

}  // namespace

int main() {
  gate_raster_vs_ray();
  gate_occlusion_sampling();
  gate_metric_oracles();
  gate_pca_fit();
  gate_serialization();
  gate_segmentation();
  std::cout << "acceptance_core: all gates passed\n";
  return 0;
}
