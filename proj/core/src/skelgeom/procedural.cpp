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

#include "disco/skelgeom/procedural.hpp"

#include <cmath>

#include "disco/error.hpp"

namespace disco::skelgeom {

namespace {

// Outward-wound triangles for an axis-aligned box.
void append_box_mesh(const AaBox& b, std::vector<Triangle>& mesh) {
  const double x0 = b.lo.x(), y0 = b.lo.y(), z0 = b.lo.z();
  const double x1 = b.hi.x(), y1 = b.hi.y(), z1 = b.hi.z();
  using V = Eigen::Vector3d;
  const V v000(x0, y0, z0), v100(x1, y0, z0), v010(x0, y1, z0), v110(x1, y1, z0);
  const V v001(x0, y0, z1), v101(x1, y0, z1), v011(x0, y1, z1), v111(x1, y1, z1);
  auto quad = [&mesh](const V& a, const V& b2, const V& c, const V& d) {
    mesh.push_back({a, b2, c});
    mesh.push_back({a, c, d});
  };
  quad(v100, v110, v111, v101);  // +x
  quad(v010, v000, v001, v011);  // -x
  quad(v110, v010, v011, v111);  // +y
  quad(v000, v100, v101, v001);  // -y
  quad(v001, v101, v111, v011);  // +z
  quad(v000, v010, v110, v100);  // -z
}

struct Range {
  double lo, hi;
  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
};

// Parameter ranges. Units are rough meters; the builder normalizes at the
// end so only the ratios matter. Car cabin overhangs are chosen so the
// front hood is always longer than the rear deck, which keeps the shape
// front/back asymmetric (no 180-degree pose ambiguity).
const Range kCarRanges[] = {
    {3.8, 4.9},    // 0 length
    {1.65, 1.95},  // 1 width
    {0.28, 0.40},  // 2 ground clearance
    {0.55, 0.75},  // 3 body height
    {0.42, 0.58},  // 4 cabin height
    {0.28, 0.36},  // 5 front overhang fraction
    {0.12, 0.20},  // 6 rear overhang fraction
    {0.80, 0.92},  // 7 cabin width fraction
    {0.30, 0.37},  // 8 wheel radius
    {0.16, 0.22},  // 9 wheel thickness
    {0.56, 0.66},  // 10 wheelbase fraction
};

const Range kChairRanges[] = {
    {0.42, 0.54},  // 0 seat width
    {0.42, 0.52},  // 1 seat depth
    {0.42, 0.52},  // 2 seat height
    {0.05, 0.09},  // 3 seat thickness
    {0.40, 0.55},  // 4 back height
    {0.04, 0.07},  // 5 back thickness
    {0.04, 0.07},  // 6 leg thickness
    {0.90, 1.00},  // 7 backrest width fraction
    {0.00, 0.02},  // 8 leg inset
};

const Range kSofaRanges[] = {
    {1.50, 2.00},  // 0 width
    {0.80, 0.95},  // 1 depth
    {0.35, 0.45},  // 2 seat height
    {0.35, 0.45},  // 3 back height above seat
    {0.18, 0.28},  // 4 arm height above seat
    {0.12, 0.20},  // 5 arm width
    {0.15, 0.22},  // 6 back thickness
    {0.00, 0.06},  // 7 base clearance
    {0.82, 0.95},  // 8 seat width fraction of depth (unused spare kept for layout)
};

struct RawModel {
  SkeletonModel model;
  std::vector<AaBox> boxes;
};

RawModel build_car_raw(const std::vector<double>& p) {
  const double L = p[0], W = p[1], g = p[2], hb = p[3], hc = p[4];
  const double f_front = p[5], f_rear = p[6], cw = p[7];
  const double rw = p[8], tw = p[9], wbf = p[10];

  const double cab_front = L / 2 - f_front * L;
  const double cab_rear = -L / 2 + f_rear * L;
  const double wc = cw * W;
  const double z_roof = g + hb + hc;
  const double z_bumper = g + 0.25 * hb;
  const double wb2 = wbf * L / 2;
  const double lip = 0.015;  // wheel face slightly proud of the body side
  const double wy = W / 2 + lip;

  RawModel r;
  SkeletonModel& m = r.model;
  m.category = Category::car;
  m.keypoint_names = {"wheel_front_left", "wheel_front_right",
                      "wheel_back_left", "wheel_back_right",
                      "roof_front_left", "roof_front_right",
                      "roof_back_left", "roof_back_right",
                      "bumper_front_left", "bumper_front_right",
                      "bumper_back_left", "bumper_back_right"};
  m.keypoints = {
      {wb2, wy, rw},   {wb2, -wy, rw},   {-wb2, wy, rw},   {-wb2, -wy, rw},
      {cab_front, wc / 2, z_roof},  {cab_front, -wc / 2, z_roof},
      {cab_rear, wc / 2, z_roof},   {cab_rear, -wc / 2, z_roof},
      {L / 2, W / 2, z_bumper},     {L / 2, -W / 2, z_bumper},
      {-L / 2, W / 2, z_bumper},    {-L / 2, -W / 2, z_bumper}};
  m.edges = {{4, 5}, {5, 7}, {7, 6}, {6, 4},    // roof loop
             {8, 9}, {9, 11}, {11, 10}, {10, 8},  // bumper loop
             {4, 8}, {5, 9}, {6, 10}, {7, 11},    // pillars
             {0, 8}, {1, 9}, {2, 10}, {3, 11}};   // wheels to bumpers
  m.faces = {{4, 5, 7}, {4, 7, 6},      // top
             {8, 9, 5}, {8, 5, 4},      // front
             {10, 6, 7}, {10, 7, 11},   // back
             {8, 4, 6}, {8, 6, 10},     // left upper
             {8, 0, 2}, {8, 2, 10},     // left lower (wheel band)
             {9, 5, 7}, {9, 7, 11},     // right upper
             {9, 1, 3}, {9, 3, 11},     // right lower
             {8, 10, 11}, {8, 11, 9}};  // bottom

  r.boxes = {
      {{-L / 2, -W / 2, g}, {L / 2, W / 2, g + hb}},                 // body
      {{cab_rear, -wc / 2, g + hb}, {cab_front, wc / 2, z_roof}},    // cabin
      {{wb2 - rw, wy - tw, 0}, {wb2 + rw, wy, 2 * rw}},              // wheels
      {{wb2 - rw, -wy, 0}, {wb2 + rw, -wy + tw, 2 * rw}},
      {{-wb2 - rw, wy - tw, 0}, {-wb2 + rw, wy, 2 * rw}},
      {{-wb2 - rw, -wy, 0}, {-wb2 + rw, -wy + tw, 2 * rw}},
  };
  return r;
}

RawModel build_chair_raw(const std::vector<double>& p) {
  const double W = p[0], D = p[1], hs = p[2], ts = p[3], hb = p[4];
  const double tb = p[5], tl = p[6], bw = p[7], inset = p[8];
  const double by = bw * W / 2;

  RawModel r;
  SkeletonModel& m = r.model;
  m.category = Category::chair;
  m.keypoint_names = {"leg_front_left", "leg_front_right",
                      "leg_back_left", "leg_back_right",
                      "seat_front_left", "seat_front_right",
                      "seat_back_left", "seat_back_right",
                      "back_top_left", "back_top_right"};
  m.keypoints = {{D / 2 - inset, W / 2 - inset, 0},
                 {D / 2 - inset, -W / 2 + inset, 0},
                 {-D / 2 + inset, W / 2 - inset, 0},
                 {-D / 2 + inset, -W / 2 + inset, 0},
                 {D / 2, W / 2, hs},
                 {D / 2, -W / 2, hs},
                 {-D / 2, W / 2, hs},
                 {-D / 2, -W / 2, hs},
                 {-D / 2, by, hs + hb},
                 {-D / 2, -by, hs + hb}};
  m.edges = {{0, 4}, {1, 5}, {2, 6}, {3, 7},
             {4, 5}, {5, 7}, {7, 6}, {6, 4},
             {6, 8}, {7, 9}, {8, 9}};
  m.faces = {{4, 5, 7}, {4, 7, 6},    // seat
             {6, 7, 9}, {6, 9, 8},    // back panel
             {0, 4, 6}, {0, 6, 2},    // left skirt
             {1, 5, 7}, {1, 7, 3},    // right skirt
             {0, 1, 5}, {0, 5, 4}};   // front skirt

  auto leg = [&](double sx, double sy) {
    const double x1 = sx * (D / 2 - inset), y1 = sy * (W / 2 - inset);
    const double x0 = x1 - sx * tl, y0 = y1 - sy * tl;
    return AaBox{{std::min(x0, x1), std::min(y0, y1), 0},
                 {std::max(x0, x1), std::max(y0, y1), hs - ts}};
  };
  r.boxes = {
      {{-D / 2, -W / 2, hs - ts}, {D / 2, W / 2, hs}},       // seat
      {{-D / 2, -by, hs}, {-D / 2 + tb, by, hs + hb}},       // back
      leg(1, 1), leg(1, -1), leg(-1, 1), leg(-1, -1),
  };
  return r;
}

RawModel build_sofa_raw(const std::vector<double>& p) {
  const double W = p[0], D = p[1], hs = p[2], hb = p[3], ha = p[4];
  const double ta = p[5], tb = p[6], g = p[7];
  const double ay = W / 2 - ta;  // inner arm face / back extent

  RawModel r;
  SkeletonModel& m = r.model;
  m.category = Category::sofa;
  m.keypoint_names = {"base_front_left", "base_front_right",
                      "base_back_left", "base_back_right",
                      "arm_front_left", "arm_front_right",
                      "arm_back_left", "arm_back_right",
                      "back_top_left", "back_top_right"};
  m.keypoints = {{D / 2, W / 2, g},   {D / 2, -W / 2, g},
                 {-D / 2, W / 2, g},  {-D / 2, -W / 2, g},
                 {D / 2, W / 2, hs + ha},  {D / 2, -W / 2, hs + ha},
                 {-D / 2, W / 2, hs + ha}, {-D / 2, -W / 2, hs + ha},
                 {-D / 2, ay, hs + hb},    {-D / 2, -ay, hs + hb}};
  m.edges = {{0, 1}, {1, 3}, {3, 2}, {2, 0},
             {0, 4}, {1, 5}, {2, 6}, {3, 7},
             {4, 6}, {5, 7}, {6, 8}, {7, 9}, {8, 9}};
  m.faces = {{0, 1, 5}, {0, 5, 4},    // front
             {0, 4, 6}, {0, 6, 2},    // left
             {1, 5, 7}, {1, 7, 3},    // right
             {2, 6, 7}, {2, 7, 3},    // back lower
             {6, 8, 9}, {6, 9, 7},    // back panel
             {4, 5, 9}, {4, 9, 8}};   // seat/back top span

  r.boxes = {
      {{-D / 2, -W / 2, g}, {D / 2, W / 2, hs}},            // base
      {{-D / 2, -ay, hs}, {-D / 2 + tb, ay, hs + hb}},      // back
      {{-D / 2, ay, hs}, {D / 2, W / 2, hs + ha}},          // left arm
      {{-D / 2, -W / 2, hs}, {D / 2, -ay, hs + ha}},        // right arm
  };
  return r;
}

struct CategoryInfo {
  const Range* ranges;
  int count;
  RawModel (*build)(const std::vector<double>&);
  int keypoints;
};

CategoryInfo info_for(Category c) {
  switch (c) {
    case Category::car:
      return {kCarRanges, static_cast<int>(std::size(kCarRanges)), build_car_raw, 12};
    case Category::chair:
      return {kChairRanges, static_cast<int>(std::size(kChairRanges)),
              build_chair_raw, 10};
    case Category::sofa:
      return {kSofaRanges, static_cast<int>(std::size(kSofaRanges)),
              build_sofa_raw, 10};
  }
  raise(Errc::ConfigError, "bad category");
}

}  // namespace

int param_count(Category category) { return info_for(category).count; }

int keypoint_count(Category category) { return info_for(category).keypoints; }

std::vector<double> sample_params(Category category, Rng& rng) {
  const CategoryInfo info = info_for(category);
  std::vector<double> p(info.count);
  for (int i = 0; i < info.count; ++i) p[i] = info.ranges[i].sample(rng);
  return p;
}

BuiltModel build_model(Category category, const std::vector<double>& params) {
  const CategoryInfo info = info_for(category);
  if (static_cast<int>(params.size()) != info.count)
    raise(Errc::ConfigError, "wrong parameter count for category");
  for (int i = 0; i < info.count; ++i) {
    if (params[i] < info.ranges[i].lo - 1e-9 || params[i] > info.ranges[i].hi + 1e-9)
      raise(Errc::ConfigError, "parameter out of the category's range");
  }

  RawModel raw = info.build(params);
  for (const auto& b : raw.boxes) append_box_mesh(b, raw.model.mesh);
  raw.model.validate();

  // Normalize keypoints, mesh and boxes with one shared similarity.
  Eigen::Vector3d lo = raw.model.keypoints[0], hi = lo,
                  sum = Eigen::Vector3d::Zero();
  for (const auto& q : raw.model.keypoints) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
    sum += q;
  }
  const double scale = (hi - lo).maxCoeff();
  if (scale < 1e-12) raise(Errc::DegenerateGeometry, "degenerate toy model");
  const Eigen::Vector3d center = sum / raw.model.keypoint_count();

  BuiltModel out;
  out.model = raw.model;
  for (auto& q : out.model.keypoints) q = (q - center) / scale;
  for (auto& tri : out.model.mesh)
    for (auto& v : tri) v = (v - center) / scale;
  out.boxes = raw.boxes;
  for (auto& b : out.boxes) {
    b.lo = (b.lo - center) / scale;
    b.hi = (b.hi - center) / scale;
  }
  out.params = params;
  return out;
}

}  // namespace disco::skelgeom
