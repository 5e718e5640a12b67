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

#include "disco/skelgeom/model.hpp"

#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "disco/error.hpp"
#include "disco/skelgeom/procedural.hpp"

namespace disco::skelgeom {

const char* category_name(Category c) {
  switch (c) {
    case Category::car: return "car";
    case Category::chair: return "chair";
    case Category::sofa: return "sofa";
  }
  return "?";
}

Category category_from_name(const std::string& name) {
  if (name == "car") return Category::car;
  if (name == "chair") return Category::chair;
  if (name == "sofa") return Category::sofa;
  raise(Errc::ConfigError, "unknown category '" + name + "'");
}

void SkeletonModel::validate() const {
  const int k = keypoint_count();
  if (k < 4) raise(Errc::ConfigError, "skeleton needs at least 4 keypoints");
  if (keypoint_names.size() != keypoints.size())
    raise(Errc::ConfigError, "keypoint name/position count mismatch");
  for (const auto& e : edges)
    for (int idx : e)
      if (idx < 0 || idx >= k) raise(Errc::ConfigError, "edge index out of range");
  for (const auto& f : faces)
    for (int idx : f)
      if (idx < 0 || idx >= k) raise(Errc::ConfigError, "face index out of range");
}

namespace {

struct Similarity {
  Eigen::Vector3d center;
  double scale;
};

Similarity keypoint_similarity(const std::vector<Eigen::Vector3d>& pts) {
  if (pts.empty()) raise(Errc::DegenerateGeometry, "no keypoints");
  Eigen::Vector3d lo = pts[0], hi = pts[0], sum = Eigen::Vector3d::Zero();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    sum += p;
  }
  const double extent = (hi - lo).maxCoeff();
  if (extent < 1e-12)
    raise(Errc::DegenerateGeometry, "all keypoints coincide");
  return {sum / static_cast<double>(pts.size()), extent};
}

}  // namespace

SkeletonModel normalize_model(const SkeletonModel& model) {
  const Similarity sim = keypoint_similarity(model.keypoints);
  SkeletonModel out = model;
  for (auto& p : out.keypoints) p = (p - sim.center) / sim.scale;
  for (auto& tri : out.mesh)
    for (auto& v : tri) v = (v - sim.center) / sim.scale;
  return out;
}

SkeletonModel load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open model file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::FormatError, std::string("model JSON parse: ") + e.what());
  }

  const Category cat = category_from_name(doc.at("category").get<std::string>());
  if (doc.contains("params") && !doc["params"].is_null()) {
    const auto params = doc["params"].get<std::vector<double>>();
    return build_model(cat, params).model;
  }

  SkeletonModel m;
  m.category = cat;
  for (const auto& kp : doc.at("keypoints")) {
    m.keypoint_names.push_back(kp.at("name").get<std::string>());
    const auto xyz = kp.at("xyz").get<std::vector<double>>();
    if (xyz.size() != 3) raise(Errc::FormatError, "keypoint xyz must have 3 entries");
    m.keypoints.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  for (const auto& e : doc.at("edges"))
    m.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  for (const auto& f : doc.at("faces"))
    m.faces.push_back({f.at(0).get<int>(), f.at(1).get<int>(), f.at(2).get<int>()});
  m.validate();
  // Without params the render surface is just the coarse faces.
  for (const auto& f : m.faces)
    m.mesh.push_back({m.keypoints[f[0]], m.keypoints[f[1]], m.keypoints[f[2]]});
  return m;
}

void save_model_json(const SkeletonModel& model, const std::vector<double>& params,
                     const std::string& path) {
  nlohmann::json doc;
  doc["category"] = category_name(model.category);
  auto& kps = doc["keypoints"] = nlohmann::json::array();
  for (int i = 0; i < model.keypoint_count(); ++i) {
    kps.push_back({{"name", model.keypoint_names[i]},
                   {"xyz", {model.keypoints[i].x(), model.keypoints[i].y(),
                            model.keypoints[i].z()}}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : model.edges) doc["edges"].push_back({e[0], e[1]});
  doc["faces"] = nlohmann::json::array();
  for (const auto& f : model.faces) doc["faces"].push_back({f[0], f[1], f[2]});
  if (!params.empty()) doc["params"] = params;
  std::ofstream out(path);
  if (!out) raise(Errc::IoError, "cannot write model file " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace disco::skelgeom
