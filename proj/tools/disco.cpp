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
//
// Command line entry point: gen | train | eval | gradcheck | ablate | plot.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "disco/datagen/datagen.hpp"
#include "disco/error.hpp"
#include "disco/eval/metrics.hpp"
#include "disco/eval/shapefit.hpp"
#include "disco/net/network.hpp"
#include "disco/net/trainer.hpp"
#include "disco/rng.hpp"
#include "disco/skelgeom/procedural.hpp"
#include "disco/tensornet/gradcheck.hpp"
#include "disco/tensornet/ops.hpp"
#include "svg_plot.hpp"

namespace {

using nlohmann::json;
using namespace disco;

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(Errc::ConfigError, path + ": " + e.what());
  }
  return doc;
}

void save_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) raise(Errc::IoError, "cannot open " + path);
  out << doc.dump(2) << "\n";
  if (!out) raise(Errc::IoError, "failed writing " + path);
}

void expect_keys(const json& doc, const std::string& what,
                 std::initializer_list<const char*> allowed) {
  if (!doc.is_object()) raise(Errc::ConfigError, what + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&key](const char* k) { return key == k; });
    if (!known)
      raise(Errc::ConfigError, "unknown key '" + key + "' in " + what);
  }
}

datagen::GenConfig parse_gen_config(const json& doc) {
  expect_keys(doc, "gen config",
              {"domain", "count", "imageSize", "channels", "bins", "seed",
               "validation", "distanceMin", "distanceMax", "elevationMaxDeg",
               "focalFactor", "targetJitter", "maxAttempts"});
  datagen::GenConfig cfg;
  const std::string domain = doc.value("domain", "cars");
  if (domain == "cars") {
    cfg.domain = datagen::Domain::cars;
  } else if (domain == "furniture") {
    cfg.domain = datagen::Domain::furniture;
  } else {
    raise(Errc::ConfigError, "domain must be 'cars' or 'furniture'");
  }
  cfg.count = doc.value("count", cfg.count);
  cfg.image_size = doc.value("imageSize", cfg.image_size);
  cfg.channels = doc.value("channels", cfg.channels);
  cfg.bins = doc.value("bins", cfg.bins);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.validation = doc.value("validation", cfg.validation);
  cfg.distance_min = doc.value("distanceMin", cfg.distance_min);
  cfg.distance_max = doc.value("distanceMax", cfg.distance_max);
  cfg.elevation_max_deg = doc.value("elevationMaxDeg", cfg.elevation_max_deg);
  cfg.focal_factor = doc.value("focalFactor", cfg.focal_factor);
  cfg.target_jitter = doc.value("targetJitter", cfg.target_jitter);
  cfg.max_attempts = doc.value("maxAttempts", cfg.max_attempts);
  return cfg;
}

json gen_config_to_json(const datagen::GenConfig& cfg) {
  return {{"domain", cfg.domain == datagen::Domain::cars ? "cars" : "furniture"},
          {"count", cfg.count},
          {"imageSize", cfg.image_size},
          {"channels", cfg.channels},
          {"bins", cfg.bins},
          {"seed", cfg.seed},
          {"validation", cfg.validation},
          {"distanceMin", cfg.distance_min},
          {"distanceMax", cfg.distance_max},
          {"elevationMaxDeg", cfg.elevation_max_deg},
          {"focalFactor", cfg.focal_factor},
          {"targetJitter", cfg.target_jitter},
          {"maxAttempts", cfg.max_attempts}};
}

/// Network settings default to the dataset's geometry when a manifest is
/// supplied; explicit keys win (and must then agree with the data at train
/// time).
net::NetworkConfig parse_network_config(const json& doc,
                                        const std::string& variant,
                                        const datagen::DatasetManifest* m) {
  expect_keys(doc, "network config",
              {"imageSize", "channels", "bins", "keypoints", "dropout"});
  net::NetworkConfig base;
  if (m != nullptr) {
    base.image_size = m->width;
    base.channels = m->channels;
    base.bins = m->bins;
    base.keypoints = m->keypoints;
  }
  base.image_size = doc.value("imageSize", base.image_size);
  base.channels = doc.value("channels", base.channels);
  base.bins = doc.value("bins", base.bins);
  base.keypoints = doc.value("keypoints", base.keypoints);
  base.dropout = doc.value("dropout", base.dropout);
  net::NetworkConfig cfg = net::make_variant(variant, base);
  cfg.validate();
  return cfg;
}

json network_config_to_json(const net::NetworkConfig& cfg) {
  return {{"imageSize", cfg.image_size},
          {"channels", cfg.channels},
          {"bins", cfg.bins},
          {"keypoints", cfg.keypoints},
          {"dropout", cfg.dropout}};
}

net::TrainConfig parse_train_config(const json& doc) {
  expect_keys(doc, "train config",
              {"lr0", "momentum", "weightDecay", "batch", "batchMix",
               "maxEpochs", "plateauImprovement", "plateauPatience",
               "maxLrDrops", "seed"});
  net::TrainConfig cfg;
  cfg.lr0 = doc.value("lr0", cfg.lr0);
  cfg.momentum = doc.value("momentum", cfg.momentum);
  cfg.weight_decay = doc.value("weightDecay", cfg.weight_decay);
  cfg.batch = doc.value("batch", cfg.batch);
  if (doc.contains("batchMix")) {
    const auto& mix = doc.at("batchMix");
    if (!mix.is_array() || mix.size() != 3)
      raise(Errc::ConfigError, "batchMix must be an array of 3 ints");
    for (int i = 0; i < 3; ++i)
      cfg.batch_mix[static_cast<std::size_t>(i)] = mix[static_cast<std::size_t>(i)].get<int>();
  }
  cfg.max_epochs = doc.value("maxEpochs", cfg.max_epochs);
  cfg.plateau_improvement =
      doc.value("plateauImprovement", cfg.plateau_improvement);
  cfg.plateau_patience = doc.value("plateauPatience", cfg.plateau_patience);
  cfg.max_lr_drops = doc.value("maxLrDrops", cfg.max_lr_drops);
  cfg.seed = doc.value("seed", cfg.seed);
  return cfg;
}

json train_config_to_json(const net::TrainConfig& cfg) {
  return {{"lr0", cfg.lr0},
          {"momentum", cfg.momentum},
          {"weightDecay", cfg.weight_decay},
          {"batch", cfg.batch},
          {"batchMix", cfg.batch_mix},
          {"maxEpochs", cfg.max_epochs},
          {"plateauImprovement", cfg.plateau_improvement},
          {"plateauPatience", cfg.plateau_patience},
          {"maxLrDrops", cfg.max_lr_drops},
          {"seed", cfg.seed}};
}

// ---------------------------------------------------------------------------
// Evaluation plumbing
// ---------------------------------------------------------------------------

/// Predictions and ground truth in metric units: 2D in pixels, 3D in the
/// normalized object frame.
struct EvalData {
  eval::Samples2d pred2d, gt2d;
  eval::Samples3d pred3d, gt3d;
  eval::SamplesFlag occluded;
  eval::SamplesScore confidence;  // 1 - predicted occlusion score
  std::vector<std::vector<float>> pose_scores;
  std::vector<double> gt_azimuth;
  std::vector<std::uint8_t> classes;  // empty when unknown
  std::vector<datagen::SampleMeta> meta;  // empty when unknown
  int width = 0, height = 0, bins = 0, keypoints = 0;
  bool has2d = false, has3d = false, haspose = false, hasvis = false;

  std::size_t count() const { return occluded.size(); }
};

void fill_gt_from_reader(EvalData& data, const datagen::DatasetReader& reader) {
  const datagen::DatasetManifest& m = reader.manifest();
  data.width = m.width;
  data.height = m.height;
  data.bins = m.bins;
  data.keypoints = m.keypoints;
  for (std::int64_t i = 0; i < m.record_count(); ++i) {
    const datagen::RenderedSample s = reader.read(i);
    std::vector<Eigen::Vector2d> kp2(static_cast<std::size_t>(m.keypoints));
    std::vector<Eigen::Vector3d> kp3(static_cast<std::size_t>(m.keypoints));
    for (int k = 0; k < m.keypoints; ++k) {
      kp2[static_cast<std::size_t>(k)] = {
          static_cast<double>(s.keypoints_2d[static_cast<std::size_t>(2 * k)]) * m.width,
          static_cast<double>(s.keypoints_2d[static_cast<std::size_t>(2 * k + 1)]) * m.height};
      kp3[static_cast<std::size_t>(k)] = {
          static_cast<double>(s.keypoints_3d[static_cast<std::size_t>(3 * k)]),
          static_cast<double>(s.keypoints_3d[static_cast<std::size_t>(3 * k + 1)]),
          static_cast<double>(s.keypoints_3d[static_cast<std::size_t>(3 * k + 2)])};
    }
    data.gt2d.push_back(std::move(kp2));
    data.gt3d.push_back(std::move(kp3));
    data.occluded.push_back(s.visibility);
    data.gt_azimuth.push_back(s.meta.camera.azimuth);
    data.classes.push_back(static_cast<std::uint8_t>(s.occlusion_class));
    data.meta.push_back(s.meta);
  }
}

EvalData eval_from_network(net::Network<float>& network,
                           const datagen::DatasetReader& reader, int batch) {
  EvalData data;
  fill_gt_from_reader(data, reader);
  const std::int64_t n = reader.manifest().record_count();
  for (int h = 0; h < network.head_count(); ++h) {
    switch (network.head_spec(h).kind) {
      case net::Concept::pose: data.haspose = true; break;
      case net::Concept::visibility: data.hasvis = true; break;
      case net::Concept::keypoints3d: data.has3d = true; break;
      case net::Concept::keypoints2d: data.has2d = true; break;
    }
  }

  for (std::int64_t start = 0; start < n; start += batch) {
    const std::int64_t count = std::min<std::int64_t>(batch, n - start);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i)
      idx[static_cast<std::size_t>(i)] = start + i;
    const net::BatchData<float> b = net::load_batch<float>(reader, idx);
    network.forward(b.images, false);

    const auto row = [](const tensornet::Tensor<float>* t, std::int64_t r) {
      const std::int64_t w = t->dim(1);
      std::vector<double> vals(static_cast<std::size_t>(w));
      for (std::int64_t j = 0; j < w; ++j)
        vals[static_cast<std::size_t>(j)] = static_cast<double>(
            t->values[static_cast<std::size_t>(r * w + j)]);
      return vals;
    };

    for (std::int64_t r = 0; r < count; ++r) {
      if (data.haspose) {
        const auto vals = row(network.output_for(net::Concept::pose), r);
        data.pose_scores.emplace_back(vals.begin(), vals.end());
      }
      if (data.hasvis) {
        const auto vals = row(network.output_for(net::Concept::visibility), r);
        std::vector<double> conf(vals.size());
        for (std::size_t j = 0; j < vals.size(); ++j) conf[j] = 1.0 - vals[j];
        data.confidence.push_back(std::move(conf));
      }
      if (data.has3d) {
        const auto vals = row(network.output_for(net::Concept::keypoints3d), r);
        std::vector<Eigen::Vector3d> kp(vals.size() / 3);
        for (std::size_t k = 0; k < kp.size(); ++k)
          kp[k] = {vals[3 * k], vals[3 * k + 1], vals[3 * k + 2]};
        data.pred3d.push_back(std::move(kp));
      }
      if (data.has2d) {
        const auto vals = row(network.output_for(net::Concept::keypoints2d), r);
        std::vector<Eigen::Vector2d> kp(vals.size() / 2);
        for (std::size_t k = 0; k < kp.size(); ++k)
          kp[k] = {vals[2 * k] * data.width, vals[2 * k + 1] * data.height};
        data.pred2d.push_back(std::move(kp));
      }
    }
  }
  return data;
}

/// Shared decoding of a predictions JSON document (see
/// net::write_predictions_json for the schema).
void fill_pred_from_json(EvalData& data, const json& doc) {
  expect_keys(doc, "predictions file",
              {"count", "bins", "keypoints", "width", "height", "samples"});
  const auto& samples = doc.at("samples");
  if (!samples.is_array() || samples.size() != data.count())
    raise(Errc::ShapeError,
          "predictions file does not match the ground truth sample count");

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const json& rec = samples[i];
    expect_keys(rec, "prediction record",
                {"pose", "visibility", "keypoints3d", "keypoints2d"});
    if (rec.contains("pose")) {
      data.haspose = true;
      data.pose_scores.push_back(rec.at("pose").get<std::vector<float>>());
    }
    if (rec.contains("visibility")) {
      data.hasvis = true;
      auto vis = rec.at("visibility").get<std::vector<double>>();
      for (double& v : vis) v = 1.0 - v;
      data.confidence.push_back(std::move(vis));
    }
    if (rec.contains("keypoints3d")) {
      data.has3d = true;
      const auto vals = rec.at("keypoints3d").get<std::vector<double>>();
      std::vector<Eigen::Vector3d> kp(vals.size() / 3);
      for (std::size_t k = 0; k < kp.size(); ++k)
        kp[k] = {vals[3 * k], vals[3 * k + 1], vals[3 * k + 2]};
      data.pred3d.push_back(std::move(kp));
    }
    if (rec.contains("keypoints2d")) {
      data.has2d = true;
      const auto vals = rec.at("keypoints2d").get<std::vector<double>>();
      std::vector<Eigen::Vector2d> kp(vals.size() / 2);
      for (std::size_t k = 0; k < kp.size(); ++k)
        kp[k] = {vals[2 * k] * data.width, vals[2 * k + 1] * data.height};
      data.pred2d.push_back(std::move(kp));
    }
  }
}

/// Ground truth from a predictions-format file: visibility scores >= 0.5 are
/// treated as occluded, the pose argmax bin center as the true azimuth.
EvalData eval_from_two_files(const json& pred, const json& gt) {
  EvalData data;
  expect_keys(gt, "ground truth file",
              {"count", "bins", "keypoints", "width", "height", "samples"});
  data.width = gt.value("width", 32);
  data.height = gt.value("height", 32);
  data.bins = gt.value("bins", 24);
  data.keypoints = gt.value("keypoints", 0);
  const auto& samples = gt.at("samples");
  if (!samples.is_array())
    raise(Errc::FormatError, "ground truth 'samples' must be an array");

  skelgeom::AzimuthBinning binning{data.bins};
  for (const json& rec : samples) {
    std::vector<std::uint8_t> occ;
    if (rec.contains("visibility")) {
      for (double v : rec.at("visibility").get<std::vector<double>>())
        occ.push_back(v >= 0.5 ? 1 : 0);
    }
    if (rec.contains("keypoints2d")) {
      const auto vals = rec.at("keypoints2d").get<std::vector<double>>();
      std::vector<Eigen::Vector2d> kp(vals.size() / 2);
      for (std::size_t k = 0; k < kp.size(); ++k)
        kp[k] = {vals[2 * k] * data.width, vals[2 * k + 1] * data.height};
      if (occ.empty()) occ.assign(kp.size(), 0);
      data.gt2d.push_back(std::move(kp));
    }
    if (rec.contains("keypoints3d")) {
      const auto vals = rec.at("keypoints3d").get<std::vector<double>>();
      std::vector<Eigen::Vector3d> kp(vals.size() / 3);
      for (std::size_t k = 0; k < kp.size(); ++k)
        kp[k] = {vals[3 * k], vals[3 * k + 1], vals[3 * k + 2]};
      if (occ.empty()) occ.assign(kp.size(), 0);
      data.gt3d.push_back(std::move(kp));
    }
    if (rec.contains("pose")) {
      const auto scores = rec.at("pose").get<std::vector<float>>();
      std::size_t best = 0;
      for (std::size_t j = 1; j < scores.size(); ++j)
        if (scores[j] > scores[best]) best = j;
      data.gt_azimuth.push_back(binning.bin_center(static_cast<int>(best)));
    } else {
      data.gt_azimuth.push_back(0.0);
    }
    data.occluded.push_back(std::move(occ));
  }
  fill_pred_from_json(data, pred);
  return data;
}

double mask_iou_metric(const EvalData& data, std::vector<double>* per_class) {
  double sum = 0;
  std::int64_t counted = 0;
  std::array<double, 3> class_sum{};
  std::array<std::int64_t, 3> class_n{};
  for (std::size_t i = 0; i < data.count(); ++i) {
    const datagen::SampleMeta& m = data.meta[i];
    const skelgeom::BuiltModel built =
        skelgeom::build_model(m.category, m.params);
    try {
      const eval::Mask gt_mask =
          eval::skeleton_to_mask(data.gt2d[i], built.model.faces, data.width);
      const eval::Mask pred_mask = eval::skeleton_to_mask(
          data.pred2d[i], built.model.faces, data.width);
      const double value = eval::iou(gt_mask, pred_mask);
      sum += value;
      ++counted;
      if (!data.classes.empty()) {
        class_sum[data.classes[i]] += value;
        ++class_n[data.classes[i]];
      }
    } catch (const Error& e) {
      if (e.code() != Errc::EmptyEvaluation) throw;
    }
  }
  if (counted == 0) raise(Errc::EmptyEvaluation, "no masks to compare");
  if (per_class != nullptr) {
    per_class->assign(3, std::numeric_limits<double>::quiet_NaN());
    for (int c = 0; c < 3; ++c)
      if (class_n[static_cast<std::size_t>(c)] > 0)
        (*per_class)[static_cast<std::size_t>(c)] =
            class_sum[static_cast<std::size_t>(c)] /
            static_cast<double>(class_n[static_cast<std::size_t>(c)]);
  }
  return sum / static_cast<double>(counted);
}

/// Applies `metric` to the subset of samples in each occlusion class and
/// appends named entries; classes where the metric is undefined are skipped.
template <typename Fn>
void per_class_breakdown(const EvalData& data, const Fn& metric,
                         std::vector<std::pair<std::string, double>>& out) {
  if (data.classes.empty()) return;
  for (int c = 0; c < 3; ++c) {
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < data.classes.size(); ++i)
      if (data.classes[i] == c) subset.push_back(i);
    if (subset.empty()) continue;
    try {
      out.emplace_back(
          datagen::occlusion_class_name(static_cast<datagen::OcclusionClass>(c)),
          metric(subset));
    } catch (const Error& e) {
      if (e.code() != Errc::EmptyEvaluation) throw;
    }
  }
}

template <typename T>
std::vector<T> take(const std::vector<T>& v,
                    const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

std::vector<eval::MetricReport> compute_reports(const EvalData& data,
                                                double alpha) {
  std::vector<eval::MetricReport> reports;
  const auto n = static_cast<std::int64_t>(data.count());
  const eval::PckConfig pck_cfg{alpha,
                                static_cast<double>(std::max(data.width, data.height))};

  if (data.has2d) {
    eval::MetricReport r{"pck2d", alpha, 0.0, n, {}};
    r.value = eval::pck_2d(data.pred2d, data.gt2d, data.occluded, pck_cfg);
    per_class_breakdown(
        data,
        [&](const std::vector<std::size_t>& idx) {
          return eval::pck_2d(take(data.pred2d, idx), take(data.gt2d, idx),
                              take(data.occluded, idx), pck_cfg);
        },
        r.per_class);
    reports.push_back(std::move(r));
  }
  if (data.has2d && data.hasvis) {
    eval::MetricReport r{"apk", alpha, 0.0, n, {}};
    r.value = eval::apk(data.pred2d, data.confidence, data.gt2d, data.occluded,
                        pck_cfg);
    per_class_breakdown(
        data,
        [&](const std::vector<std::size_t>& idx) {
          return eval::apk(take(data.pred2d, idx), take(data.confidence, idx),
                           take(data.gt2d, idx), take(data.occluded, idx),
                           pck_cfg);
        },
        r.per_class);
    reports.push_back(std::move(r));
  }
  if (data.has3d) {
    eval::MetricReport r{"pck3d", alpha, 0.0, n, {}};
    r.value = eval::pck_3d(data.pred3d, data.gt3d, alpha);
    per_class_breakdown(
        data,
        [&](const std::vector<std::size_t>& idx) {
          return eval::pck_3d(take(data.pred3d, idx), take(data.gt3d, idx),
                              alpha);
        },
        r.per_class);
    reports.push_back(std::move(r));

    eval::MetricReport ar{"averageRecall", 0.0, 0.0, n, {}};
    ar.value = eval::average_recall(data.pred3d, data.gt3d);
    per_class_breakdown(
        data,
        [&](const std::vector<std::size_t>& idx) {
          return eval::average_recall(take(data.pred3d, idx),
                                      take(data.gt3d, idx));
        },
        ar.per_class);
    reports.push_back(std::move(ar));
  }
  if (data.haspose) {
    const skelgeom::AzimuthBinning binning{data.bins};
    const auto mean_err = [&](const std::vector<std::size_t>& idx) {
      if (idx.empty()) raise(Errc::EmptyEvaluation, "no samples");
      double sum = 0;
      for (std::size_t i : idx)
        sum += eval::pose_error(data.pose_scores[i], data.gt_azimuth[i],
                                binning);
      return sum / static_cast<double>(idx.size());
    };
    std::vector<std::size_t> all(data.count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    eval::MetricReport r{"poseErrorDeg", 0.0, mean_err(all), n, {}};
    per_class_breakdown(data, mean_err, r.per_class);
    reports.push_back(std::move(r));
  }
  if (data.has2d && !data.meta.empty()) {
    std::vector<double> per_class;
    eval::MetricReport r{"maskIou", 0.0, 0.0, n, {}};
    r.value = mask_iou_metric(data, &per_class);
    for (int c = 0; c < 3; ++c)
      if (std::isfinite(per_class[static_cast<std::size_t>(c)]))
        r.per_class.emplace_back(
            datagen::occlusion_class_name(static_cast<datagen::OcclusionClass>(c)),
            per_class[static_cast<std::size_t>(c)]);
    reports.push_back(std::move(r));
  }
  if (reports.empty())
    raise(Errc::EmptyEvaluation, "no metric applies to these predictions");
  return reports;
}

// ---------------------------------------------------------------------------
// gradcheck closures
// ---------------------------------------------------------------------------

using tensornet::Tensor;

void fill_uniform(Tensor<double>& t, Rng& rng, double lo = -1.0,
                  double hi = 1.0) {
  for (double& v : t.values) v = rng.uniform(lo, hi);
}

/// Keeps values away from zero so finite differences never cross the ReLU
/// kink during probing.
void fill_away_from_zero(Tensor<double>& t, Rng& rng) {
  for (double& v : t.values) {
    v = rng.uniform(-1.0, 1.0);
    if (std::abs(v) < 0.05) v = v < 0 ? v - 0.05 : v + 0.05;
  }
}

struct OpCheck {
  std::string name;
  tensornet::GradCheckReport report;
};

std::vector<OpCheck> run_op_checks(std::uint64_t seed, int probes) {
  std::vector<OpCheck> checks;
  Rng root(seed);

  for (int stride : {1, 2}) {
    Rng rng = root.fork(static_cast<std::uint64_t>(stride));
    Tensor<double> input({2, 5, 6, 3}, true);
    Tensor<double> kernel({27, 4}, true);
    fill_uniform(input, rng);
    fill_uniform(kernel, rng);
    Tensor<double> target(
        tensornet::conv3x3_forward(input, kernel, stride).shape);
    fill_uniform(target, rng);
    auto loss = [&](bool with_grad) {
      Tensor<double> out = tensornet::conv3x3_forward(input, kernel, stride);
      const double value = tensornet::l2_loss(out, target);
      if (with_grad) {
        input.zero_grad();
        kernel.zero_grad();
        out.ensure_grad();
        tensornet::l2_loss_backward(out, target, 1.0);
        tensornet::conv3x3_backward(input, kernel, stride, out);
      }
      return value;
    };
    checks.push_back({"conv3x3_s" + std::to_string(stride),
                      tensornet::grad_check(
                          loss, {{"input", &input}, {"kernel", &kernel}},
                          probes, 1e-5, rng)});
  }

  {
    Rng rng = root.fork(3);
    Tensor<double> input({4, 3, 3, 2}, true);
    Tensor<double> gamma({2}, true), beta({2}, true);
    Tensor<double> running_mean({2}), running_var({2});
    fill_uniform(input, rng);
    fill_uniform(gamma, rng, 0.5, 1.5);
    fill_uniform(beta, rng, -0.5, 0.5);
    for (double& v : running_var.values) v = 1.0;
    Tensor<double> target(input.shape);
    fill_uniform(target, rng);
    auto loss = [&](bool with_grad) {
      tensornet::BnCache<double> cache;
      Tensor<double> out = tensornet::batchnorm_forward(
          input, gamma, beta, running_mean, running_var, true, cache);
      const double value = tensornet::l2_loss(out, target);
      if (with_grad) {
        input.zero_grad();
        gamma.zero_grad();
        beta.zero_grad();
        out.ensure_grad();
        tensornet::l2_loss_backward(out, target, 1.0);
        tensornet::batchnorm_backward(input, gamma, beta, cache, out);
      }
      return value;
    };
    checks.push_back(
        {"batchnorm",
         tensornet::grad_check(
             loss, {{"input", &input}, {"gamma", &gamma}, {"beta", &beta}},
             probes, 1e-5, rng)});
  }

  {
    Rng rng = root.fork(4);
    Tensor<double> input({6, 7}, true);
    fill_away_from_zero(input, rng);
    Tensor<double> target(input.shape);
    fill_uniform(target, rng);
    auto loss = [&](bool with_grad) {
      Tensor<double> out = tensornet::relu_forward(input);
      const double value = tensornet::l2_loss(out, target);
      if (with_grad) {
        input.zero_grad();
        out.ensure_grad();
        tensornet::l2_loss_backward(out, target, 1.0);
        tensornet::relu_backward(input, out);
      }
      return value;
    };
    checks.push_back({"relu", tensornet::grad_check(loss, {{"input", &input}},
                                                    probes, 1e-5, rng)});
  }

  {
    Rng rng = root.fork(5);
    Tensor<double> input({5, 8}, true);
    fill_uniform(input, rng);
    Tensor<double> target(input.shape);
    fill_uniform(target, rng);
    const std::uint64_t key = 0xd20b;
    auto loss = [&](bool with_grad) {
      Tensor<double> out = tensornet::dropout_forward(input, 0.3, key, true);
      const double value = tensornet::l2_loss(out, target);
      if (with_grad) {
        input.zero_grad();
        out.ensure_grad();
        tensornet::l2_loss_backward(out, target, 1.0);
        tensornet::dropout_backward(input, 0.3, key, true, out);
      }
      return value;
    };
    checks.push_back({"dropout", tensornet::grad_check(
                                     loss, {{"input", &input}}, probes, 1e-5,
                                     rng)});
  }

  {
    Rng rng = root.fork(6);
    Tensor<double> input({2, 4, 4, 3}, true);
    fill_uniform(input, rng);
    Tensor<double> target({2, 3});
    fill_uniform(target, rng);
    auto loss = [&](bool with_grad) {
      Tensor<double> out = tensornet::global_average_pool_forward(input);
      const double value = tensornet::l2_loss(out, target);
      if (with_grad) {
        input.zero_grad();
        out.ensure_grad();
        tensornet::l2_loss_backward(out, target, 1.0);
        tensornet::global_average_pool_backward(input, out);
      }
      return value;
    };
    checks.push_back({"global_average_pool",
                      tensornet::grad_check(loss, {{"input", &input}}, probes,
                                            1e-5, rng)});
  }

  {
    Rng rng = root.fork(7);
    Tensor<double> input({3, 7}, true);
    Tensor<double> weight({7, 5}, true), bias({5}, true);
    fill_uniform(input, rng);
    fill_uniform(weight, rng);
    fill_uniform(bias, rng);
    Tensor<double> target({3, 5});
    fill_uniform(target, rng);
    auto loss = [&](bool with_grad) {
      Tensor<double> out = tensornet::fc_forward(input, weight, bias);
      const double value = tensornet::l2_loss(out, target);
      if (with_grad) {
        input.zero_grad();
        weight.zero_grad();
        bias.zero_grad();
        out.ensure_grad();
        tensornet::l2_loss_backward(out, target, 1.0);
        tensornet::fc_backward(input, weight, bias, out);
      }
      return value;
    };
    checks.push_back(
        {"fc", tensornet::grad_check(
                   loss, {{"input", &input}, {"weight", &weight}, {"bias", &bias}},
                   probes, 1e-5, rng)});
  }

  {
    Rng rng = root.fork(8);
    Tensor<double> pred({4, 6}, true);
    Tensor<double> target({4, 6});
    fill_uniform(pred, rng);
    fill_uniform(target, rng);
    auto loss = [&](bool with_grad) {
      const double value = tensornet::l2_loss(pred, target);
      if (with_grad) {
        pred.zero_grad();
        tensornet::l2_loss_backward(pred, target, 1.0);
      }
      return value;
    };
    checks.push_back({"l2_loss", tensornet::grad_check(
                                     loss, {{"pred", &pred}}, probes, 1e-5,
                                     rng)});
  }

  return checks;
}

tensornet::GradCheckReport run_network_check(std::uint64_t seed, int probes) {
  net::NetworkConfig cfg;
  cfg.heads = net::disco_heads();
  net::Network<double> network(cfg, seed);

  Rng rng(hash_combine(seed, 0x6e6574));
  Tensor<double> images({2, cfg.image_size, cfg.image_size, cfg.channels});
  for (double& v : images.values) v = rng.uniform(0.0, 1.0);

  net::Targets<double> targets;
  targets.pose = Tensor<double>({2, cfg.bins});
  targets.visibility = Tensor<double>({2, cfg.keypoints});
  targets.kp3d = Tensor<double>({2, 3 * cfg.keypoints});
  targets.kp2d = Tensor<double>({2, 2 * cfg.keypoints});
  for (int r = 0; r < 2; ++r)
    targets.pose.values[static_cast<std::size_t>(
        r * cfg.bins + static_cast<int>(rng.uniform_int(cfg.bins)))] = 1.0;
  for (auto& v : targets.visibility.values) v = rng.uniform(0.0, 1.0) < 0.3;
  for (auto& v : targets.kp3d.values) v = rng.uniform(-0.5, 0.5);
  for (auto& v : targets.kp2d.values) v = rng.uniform(0.0, 1.0);

  const std::uint64_t dropout_key = 0x6b6579;
  auto loss = [&](bool with_grad) {
    network.forward(images, true, dropout_key);
    if (with_grad) return network.train_backward(targets).total;
    return network.compute_losses(targets).total;
  };
  // A smaller step than the per-op checks: across 25 ReLU layers a 1e-5
  // perturbation occasionally crosses an activation kink, which pollutes the
  // central difference even though the analytic gradient is exact.
  return tensornet::grad_check(loss, network.parameters(), probes, 1e-6, rng);
}

json report_to_json(const tensornet::GradCheckReport& report) {
  return {{"maxRelErr", report.max_rel_err},
          {"worstTensor", report.worst_tensor},
          {"probes", report.probes}};
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct GlobalArgs {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

std::string require_out(const GlobalArgs& args, const char* cmd) {
  if (args.out_path.empty())
    raise(Errc::ConfigError, std::string(cmd) + " requires --out");
  return args.out_path;
}

int cmd_gen(const GlobalArgs& args) {
  const std::string out = require_out(args, "gen");
  json doc = args.config_path.empty() ? json::object()
                                      : load_json_file(args.config_path);
  datagen::GenConfig cfg = parse_gen_config(doc);
  if (args.seed_set) cfg.seed = args.seed;
  const datagen::DatasetManifest manifest = datagen::generate_dataset(cfg, out);
  save_json_file(out + "/gen_config.json", gen_config_to_json(cfg));
  std::cout << json{{"command", "gen"},
                    {"outDir", out},
                    {"records", manifest.record_count()},
                    {"classCounts", manifest.class_counts}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_train(const GlobalArgs& args) {
  const std::string out = require_out(args, "train");
  if (args.config_path.empty())
    raise(Errc::ConfigError, "train requires --config");
  const json doc = load_json_file(args.config_path);
  expect_keys(doc, "train config file",
              {"variant", "network", "train", "trainData", "valData",
               "initSeed"});
  if (!doc.contains("trainData") || !doc.contains("valData"))
    raise(Errc::ConfigError, "train config needs trainData and valData paths");

  const std::string variant = doc.value("variant", "disco");
  const datagen::DatasetReader train_reader(doc.at("trainData").get<std::string>());
  const datagen::DatasetReader val_reader(doc.at("valData").get<std::string>());
  const net::NetworkConfig ncfg = parse_network_config(
      doc.value("network", json::object()), variant, &train_reader.manifest());
  net::TrainConfig tcfg = parse_train_config(doc.value("train", json::object()));
  if (args.seed_set) tcfg.seed = args.seed;
  const std::uint64_t init_seed = doc.value("initSeed", std::uint64_t{1});

  std::filesystem::create_directories(out);
  save_json_file(out + "/train_config.json",
                 {{"variant", variant},
                  {"network", network_config_to_json(ncfg)},
                  {"train", train_config_to_json(tcfg)},
                  {"trainData", doc.at("trainData").get<std::string>()},
                  {"valData", doc.at("valData").get<std::string>()},
                  {"initSeed", init_seed}});

  net::Network<float> network(ncfg, init_seed);
  const net::TrainResult result =
      net::train(network, train_reader, val_reader, tcfg, out);

  const json summary{{"command", "train"},
                     {"variant", variant},
                     {"epochs", result.epochs},
                     {"steps", result.steps},
                     {"bestValLoss", result.best_val_loss},
                     {"bestEpoch", result.best_epoch},
                     {"lrDrops", result.lr_drops},
                     {"interrupted", result.interrupted},
                     {"bestCheckpoint", result.best_checkpoint},
                     {"lastCheckpoint", result.last_checkpoint},
                     {"logPath", result.log_path}};
  save_json_file(out + "/result.json", summary);
  std::cout << summary.dump() << "\n";
  return 0;
}

struct EvalArgs {
  std::string pred_path, gt_path, checkpoint_path, data_path;
  double alpha = 0.1;
  bool curve = false;
  int batch = 100;
  std::string variant = "disco";
};

int cmd_eval(const GlobalArgs& args, const EvalArgs& eargs) {
  std::string out = args.out_path.empty() ? "report.json" : args.out_path;
  if (std::filesystem::is_directory(out)) out += "/report.json";

  EvalData data;
  if (!eargs.checkpoint_path.empty()) {
    if (eargs.data_path.empty())
      raise(Errc::ConfigError, "--checkpoint needs --data for ground truth");
    const datagen::DatasetReader reader(eargs.data_path);
    std::string variant = eargs.variant;
    json net_doc = json::object();
    if (!args.config_path.empty()) {
      const json doc = load_json_file(args.config_path);
      expect_keys(doc, "eval config", {"variant", "network"});
      variant = doc.value("variant", variant);
      net_doc = doc.value("network", net_doc);
    }
    const net::NetworkConfig ncfg =
        parse_network_config(net_doc, variant, &reader.manifest());
    net::Network<float> network(ncfg, 1);
    network.load_checkpoint(eargs.checkpoint_path);
    data = eval_from_network(network, reader, eargs.batch);
  } else if (!eargs.pred_path.empty() && !eargs.data_path.empty()) {
    const datagen::DatasetReader reader(eargs.data_path);
    fill_gt_from_reader(data, reader);
    fill_pred_from_json(data, load_json_file(eargs.pred_path));
  } else if (!eargs.pred_path.empty() && !eargs.gt_path.empty()) {
    data = eval_from_two_files(load_json_file(eargs.pred_path),
                               load_json_file(eargs.gt_path));
  } else {
    raise(Errc::ConfigError,
          "eval needs --checkpoint+--data, --pred+--data, or --pred+--gt");
  }

  const std::vector<eval::MetricReport> reports =
      compute_reports(data, eargs.alpha);
  eval::write_report_json(reports, out);

  if (eargs.curve) {
    std::vector<double> alphas, values;
    for (int i = 1; i <= 50; ++i) {
      const double a = static_cast<double>(i) / 100.0;
      alphas.push_back(a);
      try {
        if (data.has2d) {
          values.push_back(eval::pck_2d(
              data.pred2d, data.gt2d, data.occluded,
              {a, static_cast<double>(std::max(data.width, data.height))}));
        } else {
          values.push_back(eval::pck_3d(data.pred3d, data.gt3d, a));
        }
      } catch (const Error& e) {
        if (e.code() != Errc::EmptyEvaluation) throw;
        values.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    std::string curve_path = out;
    const std::size_t dot = curve_path.rfind(".json");
    if (dot != std::string::npos) curve_path.erase(dot);
    curve_path += "_pck_curve.csv";
    eval::write_pck_curve_csv(alphas, values, curve_path);
  }

  json doc = json::array();
  for (const auto& r : reports)
    doc.push_back({{"metric", r.metric}, {"value", r.value}});
  std::cout << json{{"command", "eval"}, {"report", out}, {"metrics", doc}}.dump()
            << "\n";
  return 0;
}

int cmd_gradcheck(const GlobalArgs& args, int op_probes, int net_probes) {
  constexpr double kOpTolerance = 1e-4;
  constexpr double kNetTolerance = 1e-3;
  const std::uint64_t seed = args.seed_set ? args.seed : 20260823;

  json ops = json::object();
  double worst_op = 0.0;
  for (const OpCheck& check : run_op_checks(seed, op_probes)) {
    ops[check.name] = report_to_json(check.report);
    worst_op = std::max(worst_op, check.report.max_rel_err);
  }
  const tensornet::GradCheckReport net_report =
      run_network_check(seed, net_probes);

  const bool pass =
      worst_op < kOpTolerance && net_report.max_rel_err < kNetTolerance;
  const json doc{{"command", "gradcheck"},
                 {"ops", ops},
                 {"network", report_to_json(net_report)},
                 {"tolerances", {{"op", kOpTolerance}, {"network", kNetTolerance}}},
                 {"pass", pass}};
  if (!args.out_path.empty()) {
    std::filesystem::create_directories(args.out_path);
    save_json_file(args.out_path + "/gradcheck.json", doc);
  }
  std::cout << doc.dump(2) << "\n";
  if (!pass) {
    std::cerr << json{{"error",
                       {{"code", "GradCheckFailed"},
                        {"message", "finite-difference check out of tolerance"}}}}
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}

std::string format_cell(double value, bool present) {
  if (!present) return "NA";
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << value;
  return os.str();
}

int cmd_ablate(const GlobalArgs& args) {
  const std::string out = require_out(args, "ablate");
  if (args.config_path.empty())
    raise(Errc::ConfigError, "ablate requires --config");
  const json doc = load_json_file(args.config_path);
  expect_keys(doc, "ablate config",
              {"variants", "network", "train", "trainData", "valData",
               "initSeed", "alpha"});
  if (!doc.contains("variants") || !doc.at("variants").is_array())
    raise(Errc::ConfigError, "ablate config needs a variants array");
  if (!doc.contains("trainData") || !doc.contains("valData"))
    raise(Errc::ConfigError, "ablate config needs trainData and valData");

  const double alpha = doc.value("alpha", 0.1);
  const std::uint64_t init_seed = doc.value("initSeed", std::uint64_t{1});
  const datagen::DatasetReader train_reader(doc.at("trainData").get<std::string>());
  const datagen::DatasetReader val_reader(doc.at("valData").get<std::string>());
  net::TrainConfig tcfg = parse_train_config(doc.value("train", json::object()));
  if (args.seed_set) tcfg.seed = args.seed;

  std::filesystem::create_directories(out);
  save_json_file(out + "/ablate_config.json", doc);

  std::ostringstream table;
  table << "variant,pck2d_full,pck2d_truncated,pck2d_multiObject,pck2d_all,"
           "pck3d_full,yawErrDeg_full\n";
  json summary = json::array();

  for (const auto& entry : doc.at("variants")) {
    const std::string variant = entry.get<std::string>();
    const std::string sub = out + "/" + variant;
    const net::NetworkConfig ncfg = parse_network_config(
        doc.value("network", json::object()), variant, &train_reader.manifest());
    net::Network<float> network(ncfg, init_seed);
    const net::TrainResult result =
        net::train(network, train_reader, val_reader, tcfg, sub);
    network.load_checkpoint(result.best_checkpoint);
    const EvalData data = eval_from_network(network, val_reader, tcfg.batch);

    // Per-class PCK columns mirror the ablation table: the 2D metric split by
    // full/truncated/multi-object, 3D and yaw on the fully visible class.
    std::array<double, 3> pck2d_class{};
    std::array<bool, 3> pck2d_class_ok{};
    double pck2d_all = 0, pck3d_full = 0, yaw_full = 0;
    bool pck2d_ok = false, pck3d_ok = false, yaw_ok = false;

    std::array<std::vector<std::size_t>, 3> by_class;
    for (std::size_t i = 0; i < data.classes.size(); ++i)
      by_class[data.classes[i]].push_back(i);

    const eval::PckConfig pck_cfg{alpha,
                                  static_cast<double>(std::max(data.width, data.height))};
    if (data.has2d) {
      pck2d_all = eval::pck_2d(data.pred2d, data.gt2d, data.occluded, pck_cfg);
      pck2d_ok = true;
      for (int c = 0; c < 3; ++c) {
        const auto& idx = by_class[static_cast<std::size_t>(c)];
        if (idx.empty()) continue;
        try {
          pck2d_class[static_cast<std::size_t>(c)] =
              eval::pck_2d(take(data.pred2d, idx), take(data.gt2d, idx),
                           take(data.occluded, idx), pck_cfg);
          pck2d_class_ok[static_cast<std::size_t>(c)] = true;
        } catch (const Error& e) {
          if (e.code() != Errc::EmptyEvaluation) throw;
        }
      }
    }
    const auto& full_idx = by_class[0];
    if (data.has3d && !full_idx.empty()) {
      pck3d_full = eval::pck_3d(take(data.pred3d, full_idx),
                                take(data.gt3d, full_idx), alpha);
      pck3d_ok = true;
    }
    if (data.haspose && !full_idx.empty()) {
      const skelgeom::AzimuthBinning binning{data.bins};
      double sum = 0;
      for (std::size_t i : full_idx)
        sum += eval::pose_error(data.pose_scores[i], data.gt_azimuth[i],
                                binning);
      yaw_full = sum / static_cast<double>(full_idx.size());
      yaw_ok = true;
    }

    table << variant;
    for (int c = 0; c < 3; ++c)
      table << ","
            << format_cell(pck2d_class[static_cast<std::size_t>(c)],
                           pck2d_class_ok[static_cast<std::size_t>(c)]);
    table << "," << format_cell(pck2d_all, pck2d_ok) << ","
          << format_cell(pck3d_full, pck3d_ok) << ","
          << format_cell(yaw_full, yaw_ok) << "\n";

    summary.push_back({{"variant", variant},
                       {"bestValLoss", result.best_val_loss},
                       {"pck2d", pck2d_ok ? json(pck2d_all) : json()},
                       {"pck3d_full", pck3d_ok ? json(pck3d_full) : json()},
                       {"yawErrDeg_full", yaw_ok ? json(yaw_full) : json()}});
  }

  const std::string table_path = out + "/table.csv";
  {
    std::ofstream tf(table_path);
    if (!tf) raise(Errc::IoError, "cannot open " + table_path);
    tf << table.str();
  }
  const json out_doc{
      {"command", "ablate"}, {"table", table_path}, {"rows", summary}};
  save_json_file(out + "/summary.json", out_doc);
  std::cout << out_doc.dump() << "\n";
  return 0;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) raise(Errc::FormatError, path + " is empty");
  return table;
}

int cmd_plot(const GlobalArgs& args, const std::string& log_path,
             const std::string& curve_path) {
  const std::string out = require_out(args, "plot");
  std::filesystem::create_directories(out);
  if (log_path.empty() && curve_path.empty())
    raise(Errc::ConfigError, "plot needs --log and/or --curve");
  json produced = json::array();

  if (!log_path.empty()) {
    const CsvTable csv = read_csv(log_path);
    if (csv.header.size() < 9 || csv.header[0] != "type")
      raise(Errc::FormatError, log_path + " is not a training log");
    plot::Series train_total{"train total", {}, {}};
    plot::Series val_total{"val total", {}, {}};
    std::array<plot::Series, 4> concepts{
        plot::Series{"pose", {}, {}}, plot::Series{"visibility", {}, {}},
        plot::Series{"3d", {}, {}}, plot::Series{"2d", {}, {}}};
    for (const auto& row : csv.rows) {
      if (row.size() < 9) continue;
      const double step = std::atof(row[1].c_str());
      const double total = std::atof(row[4].c_str());
      if (row[0] == "train") {
        train_total.x.push_back(step);
        train_total.y.push_back(total);
        for (int c = 0; c < 4; ++c) {
          concepts[static_cast<std::size_t>(c)].x.push_back(step);
          concepts[static_cast<std::size_t>(c)].y.push_back(
              std::atof(row[static_cast<std::size_t>(5 + c)].c_str()));
        }
      } else if (row[0] == "val") {
        val_total.x.push_back(step);
        val_total.y.push_back(total);
      }
    }
    std::vector<plot::Series> series{train_total};
    if (!val_total.x.empty()) series.push_back(val_total);
    for (const auto& s : concepts)
      if (!s.y.empty()) series.push_back(s);
    const std::string path = out + "/loss.svg";
    plot::write_line_chart(path, "training loss", "step", "L2 loss", series);
    produced.push_back(path);
  }

  if (!curve_path.empty()) {
    const CsvTable csv = read_csv(curve_path);
    plot::Series series{"PCK", {}, {}};
    for (const auto& row : csv.rows) {
      if (row.size() < 2) continue;
      const double y = std::atof(row[1].c_str());
      if (!std::isfinite(y)) continue;
      series.x.push_back(std::atof(row[0].c_str()));
      series.y.push_back(y);
    }
    const std::string path = out + "/pck_curve.svg";
    plot::write_line_chart(path, "PCK vs alpha", "alpha", "PCK", {series});
    produced.push_back(path);
  }

  std::cout << json{{"command", "plot"}, {"plots", produced}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 1;
  if (const char* env = std::getenv("DISCO_THREADS"))
    threads = std::max(1, std::atoi(env));
  tensornet::set_blas_threads(threads);

  CLI::App app{"disco: deep supervision with shape concepts at desk scale"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs args;
  CLI::Option* seed_opt =
      app.add_option("--seed", args.seed, "Override the config seed");
  app.add_option("--config", args.config_path, "JSON config file");
  app.add_option("--out", args.out_path, "Output directory (or report path)");

  app.add_subcommand("gen", "Generate a synthetic dataset");
  app.add_subcommand("train", "Train a network variant");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate predictions");
  EvalArgs eargs;
  eval_cmd->add_option("--pred", eargs.pred_path, "Predictions JSON file");
  eval_cmd->add_option("--gt", eargs.gt_path, "Ground-truth JSON file");
  eval_cmd->add_option("--checkpoint", eargs.checkpoint_path,
                       "Network checkpoint (.dscw)");
  eval_cmd->add_option("--data", eargs.data_path, "Dataset directory");
  eval_cmd->add_option("--alpha", eargs.alpha, "PCK threshold fraction");
  eval_cmd->add_flag("--curve", eargs.curve, "Also write a PCK-vs-alpha CSV");
  eval_cmd->add_option("--batch", eargs.batch, "Inference batch size");
  eval_cmd->add_option("--variant", eargs.variant,
                       "Network variant for --checkpoint mode");

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  int op_probes = 40, net_probes = 1;
  gradcheck_cmd->add_option("--op-probes", op_probes,
                            "Probed entries per tensor in per-op checks");
  gradcheck_cmd->add_option("--net-probes", net_probes,
                            "Probed entries per tensor in the full-network check");

  app.add_subcommand("ablate", "Train and score a list of variants");

  CLI::App* plot_cmd = app.add_subcommand("plot", "Render SVG charts");
  std::string log_path, curve_path;
  plot_cmd->add_option("--log", log_path, "train_log.csv to plot");
  plot_cmd->add_option("--curve", curve_path, "PCK curve CSV to plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  args.seed_set = seed_opt->count() > 0;

  try {
    if (app.got_subcommand("gen")) return cmd_gen(args);
    if (app.got_subcommand("train")) return cmd_train(args);
    if (app.got_subcommand("eval")) return cmd_eval(args, eargs);
    if (app.got_subcommand("gradcheck"))
      return cmd_gradcheck(args, op_probes, net_probes);
    if (app.got_subcommand("ablate")) return cmd_ablate(args);
    if (app.got_subcommand("plot")) return cmd_plot(args, log_path, curve_path);
  } catch (const Error& e) {
    std::cerr << json{{"error",
                       {{"code", errc_name(e.code())}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}
