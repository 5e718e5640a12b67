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

#include "disco/render/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Geometry>

#include <nlohmann/json.hpp>

#include "disco/error.hpp"
#include "disco/rng.hpp"

namespace disco::render {

namespace {

// Triangles reaching closer than this camera-frame depth are dropped rather
// than clipped; valid scenes keep every surface far in front of the camera.
constexpr double kNearPlane = 1e-6;

double edge_function(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

struct DrawTriangle {
  Triangle world;
  std::int32_t instance_id;  // 1-based
  std::array<float, 3> albedo;
};

std::vector<DrawTriangle> scene_draw_list(const SceneConfig& scene) {
  std::vector<DrawTriangle> out;
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const Instance& inst = scene.instances[i];
    for (const Triangle& tri : inst.model.mesh) {
      DrawTriangle d;
      d.world = {inst.placement.apply(tri[0]), inst.placement.apply(tri[1]),
                 inst.placement.apply(tri[2])};
      d.instance_id = static_cast<std::int32_t>(i) + 1;
      d.albedo = inst.albedo;
      out.push_back(d);
    }
  }
  return out;
}

// Moller-Trumbore ray/triangle intersection; returns the ray parameter t for
// ray origin + t*dir, or a negative value when there is no hit.
double ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                    const Triangle& tri) {
  constexpr double kEps = 1e-12;
  const Eigen::Vector3d e1 = tri[1] - tri[0];
  const Eigen::Vector3d e2 = tri[2] - tri[0];
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < kEps) return -1.0;
  const double inv_det = 1.0 / det;
  const Eigen::Vector3d s = origin - tri[0];
  const double u = s.dot(p) * inv_det;
  if (u < 0.0 || u > 1.0) return -1.0;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = dir.dot(q) * inv_det;
  if (v < 0.0 || u + v > 1.0) return -1.0;
  return e2.dot(q) * inv_det;
}

}  // namespace

void SceneConfig::validate() const {
  if (instances.empty() || instances.size() > 2)
    raise(Errc::ConfigError, "scene requires 1 or 2 instances");
  if (channels != 1 && channels != 3)
    raise(Errc::ConfigError, "scene channels must be 1 or 3");
  if (std::abs(light_dir.norm() - 1.0) > 1e-6)
    raise(Errc::ConfigError, "light_dir must be a unit vector");
  if (light_strength < 0.0)
    raise(Errc::ConfigError, "light_strength must be non-negative");
  camera.validate();
  for (const Instance& inst : instances)
    if (inst.model.mesh.empty())
      raise(Errc::DegenerateGeometry, "instance has an empty mesh");
  if (instances.size() == 2 &&
      obb_overlap(instance_obb(instances[0]), instance_obb(instances[1])))
    raise(Errc::ConfigError, "instances overlap in 3D");
}

Obb instance_obb(const Instance& instance) {
  if (instance.model.mesh.empty())
    raise(Errc::DegenerateGeometry, "empty mesh has no bounding box");
  Eigen::Vector3d lo = instance.model.mesh[0][0], hi = lo;
  for (const Triangle& tri : instance.model.mesh)
    for (const auto& v : tri) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  const double c = std::cos(instance.placement.yaw);
  const double s = std::sin(instance.placement.yaw);
  Obb obb;
  obb.half = (hi - lo) / 2;
  obb.axes << c, -s, 0, s, c, 0, 0, 0, 1;
  obb.center = instance.placement.apply((lo + hi) / 2);
  return obb;
}

bool obb_overlap(const Obb& a, const Obb& b) {
  // Separating-axis test over the 15 candidate axes of two oriented boxes.
  std::vector<Eigen::Vector3d> axes;
  for (int i = 0; i < 3; ++i) axes.push_back(a.axes.col(i));
  for (int i = 0; i < 3; ++i) axes.push_back(b.axes.col(i));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector3d cross = a.axes.col(i).cross(b.axes.col(j));
      if (cross.norm() > 1e-9) axes.push_back(cross.normalized());
    }
  const Eigen::Vector3d d = b.center - a.center;
  for (const Eigen::Vector3d& axis : axes) {
    double ra = 0, rb = 0;
    for (int i = 0; i < 3; ++i) {
      ra += a.half[i] * std::abs(axis.dot(a.axes.col(i)));
      rb += b.half[i] * std::abs(axis.dot(b.axes.col(i)));
    }
    if (std::abs(axis.dot(d)) > ra + rb) return false;
  }
  return true;
}

std::vector<Triangle> instance_world_triangles(const Instance& instance) {
  std::vector<Triangle> out;
  out.reserve(instance.model.mesh.size());
  for (const Triangle& tri : instance.model.mesh)
    out.push_back({instance.placement.apply(tri[0]),
                   instance.placement.apply(tri[1]),
                   instance.placement.apply(tri[2])});
  return out;
}

FrameBuffer rasterize(const SceneConfig& scene) {
  scene.validate();
  const Camera cam = scene.camera.wrapped();
  const Eigen::Matrix3d world_to_cam = cam.world_to_camera();
  const Eigen::Vector3d cam_pos = cam.position();

  const std::vector<DrawTriangle> draw = scene_draw_list(scene);
  if (draw.empty()) raise(Errc::DegenerateGeometry, "scene has no triangles");

  FrameBuffer fb(cam.width, cam.height, scene.channels);

  for (const DrawTriangle& d : draw) {
    // Camera-frame vertices and projections.
    Eigen::Vector3d vc[3];
    Eigen::Vector2d px[3];
    bool in_front = true;
    for (int k = 0; k < 3; ++k) {
      vc[k] = world_to_cam * (d.world[k] - cam_pos);
      if (vc[k].z() < kNearPlane) {
        in_front = false;
        break;
      }
      px[k] = {cam.focal * vc[k].x() / vc[k].z() + cam.principal_point.x(),
               cam.focal * vc[k].y() / vc[k].z() + cam.principal_point.y()};
    }
    if (!in_front) continue;

    const double area = edge_function(px[0], px[1], px[2]);
    if (std::abs(area) < 1e-12) continue;  // degenerate in projection

    // Flat Lambertian shade from the world-space face normal.
    const Eigen::Vector3d normal =
        (d.world[1] - d.world[0]).cross(d.world[2] - d.world[0]).normalized();
    const double shade = std::max(0.0, normal.dot(scene.light_dir)) *
                         scene.light_strength;

    int x0 = static_cast<int>(std::floor(std::min({px[0].x(), px[1].x(), px[2].x()})));
    int x1 = static_cast<int>(std::ceil(std::max({px[0].x(), px[1].x(), px[2].x()})));
    int y0 = static_cast<int>(std::floor(std::min({px[0].y(), px[1].y(), px[2].y()})));
    int y1 = static_cast<int>(std::ceil(std::max({px[0].y(), px[1].y(), px[2].y()})));
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, fb.width - 1);
    y1 = std::min(y1, fb.height - 1);

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d p(x + 0.5, y + 0.5);
        const double w0 = edge_function(px[1], px[2], p);
        const double w1 = edge_function(px[2], px[0], p);
        const double w2 = edge_function(px[0], px[1], p);
        const bool inside =
            (w0 >= 0 && w1 >= 0 && w2 >= 0) || (w0 <= 0 && w1 <= 0 && w2 <= 0);
        if (!inside) continue;
        const double b0 = w0 / area, b1 = w1 / area, b2 = w2 / area;
        // Perspective-correct depth: 1/z interpolates linearly in screen space.
        const double inv_z = b0 / vc[0].z() + b1 / vc[1].z() + b2 / vc[2].z();
        if (inv_z <= 0) continue;
        const float z = static_cast<float>(1.0 / inv_z);
        const std::size_t idx = fb.pixel(x, y);
        // Strict less-than keeps the earlier (lower-index) triangle on ties.
        if (z < fb.depth[idx]) {
          fb.depth[idx] = z;
          fb.instance_id[idx] = d.instance_id;
          for (int c = 0; c < fb.channels; ++c) {
            const float v = static_cast<float>(shade) * d.albedo[c % 3];
            fb.at(x, y, c) = std::clamp(v, 0.0f, 1.0f);
          }
        }
      }
    }
  }
  return fb;
}

std::vector<std::uint8_t> keypoint_visibility(
    const SceneConfig& scene, const std::vector<Eigen::Vector3d>& points) {
  const Camera cam = scene.camera.wrapped();
  const Eigen::Vector3d cam_pos = cam.position();
  std::vector<Triangle> triangles;
  for (const Instance& inst : scene.instances) {
    std::vector<Triangle> t = instance_world_triangles(inst);
    triangles.insert(triangles.end(), t.begin(), t.end());
  }

  std::vector<std::uint8_t> occluded(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    skelgeom::Projection proj;
    if (!skelgeom::try_project(points[i], cam, proj) ||
        proj.pixel.x() < 0.0 || proj.pixel.x() >= cam.width ||
        proj.pixel.y() < 0.0 || proj.pixel.y() >= cam.height) {
      occluded[i] = 1;
      continue;
    }
    const Eigen::Vector3d dir = points[i] - cam_pos;
    const double len = dir.norm();
    // A triangle occludes the point when it cuts the ray strictly before the
    // point, outside the surface tolerance.
    const double t_limit = 1.0 - kVisibilityTolerance / len;
    for (const Triangle& tri : triangles) {
      const double t = ray_triangle(cam_pos, dir, tri);
      if (t > 0.0 && t < t_limit) {
        occluded[i] = 1;
        break;
      }
    }
  }
  return occluded;
}

double occlusion_ratio(const SceneConfig& scene, int instance_index) {
  if (instance_index < 0 ||
      instance_index >= static_cast<int>(scene.instances.size()))
    raise(Errc::ConfigError, "instance index out of range");

  const FrameBuffer full = rasterize(scene);

  SceneConfig alone = scene;
  alone.instances = {scene.instances[instance_index]};
  const FrameBuffer solo = rasterize(alone);

  std::size_t full_count = 0, solo_count = 0;
  const std::int32_t want = instance_index + 1;
  for (std::size_t i = 0; i < full.instance_id.size(); ++i) {
    if (full.instance_id[i] == want) ++full_count;
    if (solo.instance_id[i] == 1) ++solo_count;
  }
  if (solo_count == 0)
    raise(Errc::ZeroProjection, "instance projects to zero pixels");
  return static_cast<double>(full_count) / static_cast<double>(solo_count);
}

TruncateResult truncate(const FrameBuffer& frame,
                        const std::array<BoundaryShift, 2>& shifts) {
  if (shifts[0].boundary == shifts[1].boundary)
    raise(Errc::ConfigError, "truncation boundaries must be distinct");
  for (const BoundaryShift& s : shifts)
    if (s.fraction < 0.0 || s.fraction > 0.3)
      raise(Errc::ConfigError, "truncation fraction must lie in [0, 0.3]");

  int x0 = 0, y0 = 0, x1 = frame.width, y1 = frame.height;
  for (const BoundaryShift& s : shifts) {
    switch (s.boundary) {
      case Boundary::left:
        x0 = static_cast<int>(std::floor(s.fraction * frame.width));
        break;
      case Boundary::right:
        x1 = frame.width - static_cast<int>(std::floor(s.fraction * frame.width));
        break;
      case Boundary::top:
        y0 = static_cast<int>(std::floor(s.fraction * frame.height));
        break;
      case Boundary::bottom:
        y1 = frame.height -
             static_cast<int>(std::floor(s.fraction * frame.height));
        break;
    }
  }
  if (x1 <= x0 || y1 <= y0) raise(Errc::InvalidCrop, "crop region is empty");

  TruncateResult out;
  CropRecord& crop = out.crop;
  crop.crop_x0 = x0;
  crop.crop_y0 = y0;
  crop.crop_w = x1 - x0;
  crop.crop_h = y1 - y0;
  crop.scale_x = static_cast<double>(frame.width) / crop.crop_w;
  crop.scale_y = static_cast<double>(frame.height) / crop.crop_h;
  crop.offset_x = -x0 * crop.scale_x;
  crop.offset_y = -y0 * crop.scale_y;

  FrameBuffer& fb = out.frame;
  fb = FrameBuffer(frame.width, frame.height, frame.channels);
  for (int y = 0; y < fb.height; ++y) {
    const int sy = std::min(
        y1 - 1, y0 + static_cast<int>((y + 0.5) * crop.crop_h / frame.height));
    for (int x = 0; x < fb.width; ++x) {
      const int sx = std::min(
          x1 - 1, x0 + static_cast<int>((x + 0.5) * crop.crop_w / frame.width));
      const std::size_t dst = fb.pixel(x, y), src = frame.pixel(sx, sy);
      fb.depth[dst] = frame.depth[src];
      fb.instance_id[dst] = frame.instance_id[src];
      for (int c = 0; c < fb.channels; ++c) fb.at(x, y, c) = frame.at(sx, sy, c);
    }
  }
  return out;
}

FrameBuffer composite_background(const FrameBuffer& frame,
                                 const BackgroundSpec& background) {
  FrameBuffer out = frame;
  const double cx = frame.width / 2.0, cy = frame.height / 2.0;
  const double gx = std::cos(background.angle), gy = std::sin(background.angle);
  const double diag = std::hypot(frame.width, frame.height);

  auto noise_lattice = [&background](int ix, int iy) {
    const std::uint64_t key =
        hash_combine(hash_combine(background.seed, 0x6e6f697365ULL),
                     (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix))
                      << 32) |
                         static_cast<std::uint32_t>(iy));
    return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
  };

  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (frame.instance_id[frame.pixel(x, y)] != 0) continue;
      float v = background.value_a;
      switch (background.kind) {
        case BackgroundKind::uniform:
          break;
        case BackgroundKind::gradient: {
          const double t =
              ((x + 0.5 - cx) * gx + (y + 0.5 - cy) * gy) / diag + 0.5;
          const double tc = std::clamp(t, 0.0, 1.0);
          v = static_cast<float>(background.value_a +
                                 (background.value_b - background.value_a) * tc);
          break;
        }
        case BackgroundKind::checker: {
          const int cell = std::max(1, background.checker_size);
          const bool odd = ((x / cell) + (y / cell)) % 2 != 0;
          v = odd ? background.value_b : background.value_a;
          break;
        }
        case BackgroundKind::noise: {
          const int cells = std::max(1, background.noise_cells);
          const double fx = (x + 0.5) * cells / frame.width;
          const double fy = (y + 0.5) * cells / frame.height;
          const int ix = static_cast<int>(std::floor(fx));
          const int iy = static_cast<int>(std::floor(fy));
          double tx = fx - ix, ty = fy - iy;
          tx = tx * tx * (3 - 2 * tx);  // smoothstep
          ty = ty * ty * (3 - 2 * ty);
          const double n00 = noise_lattice(ix, iy);
          const double n10 = noise_lattice(ix + 1, iy);
          const double n01 = noise_lattice(ix, iy + 1);
          const double n11 = noise_lattice(ix + 1, iy + 1);
          const double n = (n00 * (1 - tx) + n10 * tx) * (1 - ty) +
                           (n01 * (1 - tx) + n11 * tx) * ty;
          v = static_cast<float>(background.value_a +
                                 (background.value_b - background.value_a) * n);
          break;
        }
      }
      v = std::clamp(v, 0.0f, 1.0f);
      for (int c = 0; c < frame.channels; ++c) out.at(x, y, c) = v;
    }
  }
  return out;
}

void write_frame_debug(const FrameBuffer& frame, const std::string& image_path) {
  std::ofstream img(image_path, std::ios::binary);
  if (!img) raise(Errc::IoError, "cannot open " + image_path);
  img << (frame.channels == 1 ? "P5" : "P6") << "\n"
      << frame.width << " " << frame.height << "\n255\n";
  for (float v : frame.color) {
    const int byte = static_cast<int>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
    img.put(static_cast<char>(byte));
  }
  if (!img) raise(Errc::IoError, "failed writing " + image_path);
  img.close();

  double dmin = std::numeric_limits<double>::infinity(), dmax = 0, dsum = 0;
  std::size_t finite = 0;
  for (float d : frame.depth) {
    if (!std::isfinite(d)) continue;
    dmin = std::min<double>(dmin, d);
    dmax = std::max<double>(dmax, d);
    dsum += d;
    ++finite;
  }
  nlohmann::json sidecar = {
      {"width", frame.width},
      {"height", frame.height},
      {"finite_pixels", finite},
      {"depth_min", finite ? dmin : 0.0},
      {"depth_max", finite ? dmax : 0.0},
      {"depth_mean", finite ? dsum / finite : 0.0},
  };
  std::ofstream side(image_path + ".depth.json");
  if (!side) raise(Errc::IoError, "cannot open " + image_path + ".depth.json");
  side << sidecar.dump(2) << "\n";
}

}  // namespace disco::render
