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

#include "disco/net/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "disco/rng.hpp"

namespace disco::net {

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void sigint_handler(int) { g_interrupted = 1; }

template <typename T>
void fill_targets(Targets<T>& targets, const datagen::RenderedSample& s,
                  std::int64_t row) {
  const auto copy_row = [row](Tensor<T>& dst, const std::vector<float>& src) {
    const std::int64_t w = dst.dim(1);
    for (std::int64_t j = 0; j < w; ++j)
      dst.values[static_cast<std::size_t>(row * w + j)] =
          static_cast<T>(src[static_cast<std::size_t>(j)]);
  };
  copy_row(targets.pose, s.pose_onehot);
  copy_row(targets.kp2d, s.keypoints_2d);
  copy_row(targets.kp3d, s.keypoints_3d);
  const std::int64_t k = targets.visibility.dim(1);
  for (std::int64_t j = 0; j < k; ++j)
    targets.visibility.values[static_cast<std::size_t>(row * k + j)] =
        static_cast<T>(s.visibility[static_cast<std::size_t>(j)]);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
}

std::string csv_row(const char* type, int step, int epoch, double lr,
                    const LossBreakdown& loss,
                    const std::array<double, 4>& concepts) {
  std::string line = std::string(type) + "," + std::to_string(step) + "," +
                     std::to_string(epoch) + "," + std::to_string(lr) + "," +
                     std::to_string(loss.total);
  for (double v : concepts) line += "," + std::to_string(v);
  return line;
}

}  // namespace

void install_sigint_handler() { std::signal(SIGINT, sigint_handler); }
bool interrupt_requested() { return g_interrupted != 0; }
void clear_interrupt() { g_interrupted = 0; }

void TrainConfig::validate() const {
  if (lr0 <= 0) raise(Errc::ConfigError, "lr0 must be positive");
  if (momentum < 0 || momentum >= 1)
    raise(Errc::ConfigError, "momentum must be in [0,1)");
  if (weight_decay < 0) raise(Errc::ConfigError, "weight_decay must be >= 0");
  if (batch < 2) raise(Errc::ConfigError, "batch must be at least 2");
  int mix_total = 0;
  for (int m : batch_mix) {
    if (m < 0) raise(Errc::ConfigError, "batch mix entries must be >= 0");
    mix_total += m;
  }
  if (mix_total != batch)
    raise(Errc::ConfigError, "batch mix must sum to the batch size");
  if (max_epochs < 0) raise(Errc::ConfigError, "max_epochs must be >= 0");
  if (plateau_improvement <= 0 || plateau_improvement >= 1)
    raise(Errc::ConfigError, "plateau_improvement must be in (0,1)");
  if (plateau_patience < 1 || max_lr_drops < 0)
    raise(Errc::ConfigError, "bad plateau settings");
}

template <typename T>
BatchData<T> load_batch(const datagen::DatasetReader& reader,
                        const std::vector<std::int64_t>& indices) {
  const datagen::DatasetManifest& m = reader.manifest();
  const std::int64_t n = static_cast<std::int64_t>(indices.size());
  BatchData<T> batch;
  batch.images = Tensor<T>({n, m.height, m.width, m.channels});
  batch.targets.pose = Tensor<T>({n, m.bins});
  batch.targets.visibility = Tensor<T>({n, m.keypoints});
  batch.targets.kp3d = Tensor<T>({n, 3 * m.keypoints});
  batch.targets.kp2d = Tensor<T>({n, 2 * m.keypoints});

  const std::int64_t pixels =
      static_cast<std::int64_t>(m.height) * m.width * m.channels;
  for (std::int64_t row = 0; row < n; ++row) {
    const datagen::RenderedSample s = reader.read(indices[static_cast<std::size_t>(row)]);
    for (std::int64_t p = 0; p < pixels; ++p)
      batch.images.values[static_cast<std::size_t>(row * pixels + p)] =
          static_cast<T>(s.image[static_cast<std::size_t>(p)]) / T(255);
    fill_targets(batch.targets, s, row);
  }
  return batch;
}

template <typename T>
LossBreakdown training_step(Network<T>& net, const BatchData<T>& batch,
                            std::map<std::string, Tensor<T>>& velocities,
                            const StepConfig& config) {
  net.forward(batch.images, true, config.dropout_key);
  const LossBreakdown breakdown = net.train_backward(batch.targets);

  double total_weight = 0;
  for (int i = 0; i < net.head_count(); ++i)
    total_weight += net.head_spec(i).loss_weight;
  if (total_weight == 0.0) return breakdown;  // nothing to optimize

  auto params = net.parameters();
  for (auto& [name, t] : params)
    for (T g : t->grad)
      if (!std::isfinite(static_cast<double>(g)))
        raise(Errc::NonFiniteGradient, "non-finite gradient in '" + name + "'");

  for (auto& [name, t] : params) {
    auto [it, inserted] = velocities.try_emplace(name, t->shape);
    tensornet::sgd_step(*t, it->second, static_cast<T>(config.lr),
                        static_cast<T>(config.momentum),
                        static_cast<T>(config.weight_decay));
  }
  return breakdown;
}

template <typename T>
double validation_loss(Network<T>& net, const datagen::DatasetReader& data,
                       int batch) {
  const std::int64_t n = data.manifest().record_count();
  if (n == 0) raise(Errc::ConfigError, "empty validation set");
  double acc = 0;
  for (std::int64_t start = 0; start < n; start += batch) {
    const std::int64_t count = std::min<std::int64_t>(batch, n - start);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = start + i;
    const BatchData<T> b = load_batch<T>(data, idx);
    net.forward(b.images, false);
    acc += net.compute_losses(b.targets).total * static_cast<double>(count);
  }
  return acc / static_cast<double>(n);
}

template <typename T>
TrainResult train(Network<T>& net, const datagen::DatasetReader& train_data,
                  const datagen::DatasetReader& val_data,
                  const TrainConfig& config, const std::string& out_dir) {
  config.validate();
  const datagen::DatasetManifest& m = train_data.manifest();
  if (m.bins != net.config().bins || m.keypoints != net.config().keypoints ||
      m.width != net.config().image_size || m.channels != net.config().channels)
    raise(Errc::ConfigError, "dataset does not match the network config");

  std::filesystem::create_directories(out_dir);
  install_sigint_handler();

  // Index pools per occlusion class.
  std::array<std::vector<std::int64_t>, 3> pools;
  for (std::int64_t i = 0; i < m.record_count(); ++i)
    pools[m.classes[static_cast<std::size_t>(i)]].push_back(i);
  std::int64_t steps_per_epoch = std::numeric_limits<std::int64_t>::max();
  for (int c = 0; c < 3; ++c) {
    if (config.batch_mix[static_cast<std::size_t>(c)] == 0) continue;
    steps_per_epoch = std::min<std::int64_t>(
        steps_per_epoch,
        static_cast<std::int64_t>(pools[static_cast<std::size_t>(c)].size()) /
            config.batch_mix[static_cast<std::size_t>(c)]);
  }
  if (steps_per_epoch <= 0 ||
      steps_per_epoch == std::numeric_limits<std::int64_t>::max())
    raise(Errc::ConfigError,
          "training set too small for one batch of the requested mix");

  TrainResult result;
  result.best_checkpoint = out_dir + "/best.dscw";
  result.last_checkpoint = out_dir + "/last.dscw";
  result.log_path = out_dir + "/train_log.csv";

  std::ofstream log(result.log_path);
  if (!log) raise(Errc::IoError, "cannot open " + result.log_path);
  log << "type,step,epoch,lr,total,pose,visibility,keypoints3d,keypoints2d\n";

  Rng rng(hash_combine(config.seed, 0x747261696eULL));  // "train" stream
  std::map<std::string, Tensor<T>> velocities;
  double lr = config.lr0;
  double plateau_best = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (auto& pool : pools) shuffle(pool, rng);

    for (std::int64_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<std::int64_t> indices;
      indices.reserve(static_cast<std::size_t>(config.batch));
      for (int c = 0; c < 3; ++c) {
        const int take = config.batch_mix[static_cast<std::size_t>(c)];
        const auto& pool = pools[static_cast<std::size_t>(c)];
        for (int j = 0; j < take; ++j)
          indices.push_back(pool[static_cast<std::size_t>(step * take + j)]);
      }
      const BatchData<T> batch = load_batch<T>(train_data, indices);
      StepConfig sc{lr, config.momentum, config.weight_decay,
                    hash_combine(config.seed, static_cast<std::uint64_t>(result.steps))};
      LossBreakdown loss;
      try {
        loss = training_step(net, batch, velocities, sc);
      } catch (const Error& e) {
        if (e.code() != Errc::NonFiniteGradient) throw;
        log << "error," << result.steps << "," << epoch << "," << lr
            << ",nan,nan,nan,nan,nan\n";
        ++result.steps;
        continue;  // step aborted, weights untouched
      }
      log << csv_row("train", result.steps, epoch, lr, loss, loss.per_concept)
          << "\n";
      ++result.steps;
      if (result.steps % 25 == 0) log.flush();  // keep the log observable

      if (interrupt_requested()) {
        net.save_checkpoint(out_dir + "/interrupt.dscw");
        log.flush();
        result.interrupted = true;
        result.epochs = epoch;
        net.save_checkpoint(result.last_checkpoint);
        return result;
      }
    }

    const double val = validation_loss(net, val_data, config.batch);
    LossBreakdown val_loss;
    val_loss.total = val;
    log << csv_row("val", result.steps, epoch, lr, val_loss, {0, 0, 0, 0})
        << "\n";
    log.flush();
    result.epochs = epoch;

    if (val < result.best_val_loss) {
      result.best_val_loss = val;
      result.best_epoch = epoch;
      net.save_checkpoint(result.best_checkpoint);
    }

    // Plateau rule: an evaluation is stale unless it improves the best by
    // >= plateau_improvement (relative).
    if (val <= plateau_best * (1.0 - config.plateau_improvement)) {
      plateau_best = val;
      stale = 0;
    } else {
      ++stale;
      if (stale >= config.plateau_patience) {
        if (result.lr_drops < config.max_lr_drops) {
          lr *= 0.1;
          ++result.lr_drops;
          stale = 0;
        } else {
          break;  // plateaued after the final allowed drop
        }
      }
    }
  }

  net.save_checkpoint(result.last_checkpoint);
  log.flush();
  return result;
}

template <typename T>
void write_predictions_json(Network<T>& net,
                            const datagen::DatasetReader& data,
                            const std::string& path, int batch) {
  const datagen::DatasetManifest& m = data.manifest();
  nlohmann::json samples = nlohmann::json::array();

  const std::int64_t n = m.record_count();
  for (std::int64_t start = 0; start < n; start += batch) {
    const std::int64_t count = std::min<std::int64_t>(batch, n - start);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = start + i;
    const BatchData<T> b = load_batch<T>(data, idx);
    net.forward(b.images, false);

    for (std::int64_t row = 0; row < count; ++row) {
      nlohmann::json rec;
      for (Concept c : {Concept::pose, Concept::visibility,
                        Concept::keypoints3d, Concept::keypoints2d}) {
        const Tensor<T>* out = net.output_for(c);
        if (!out) continue;
        const std::int64_t w = out->dim(1);
        std::vector<double> vals(static_cast<std::size_t>(w));
        for (std::int64_t j = 0; j < w; ++j)
          vals[static_cast<std::size_t>(j)] =
              static_cast<double>(out->values[static_cast<std::size_t>(row * w + j)]);
        rec[concept_name(c)] = vals;
      }
      samples.push_back(std::move(rec));
    }
  }

  nlohmann::json doc = {{"count", n},
                        {"bins", m.bins},
                        {"keypoints", m.keypoints},
                        {"width", m.width},
                        {"height", m.height}};
  doc["samples"] = std::move(samples);
  std::ofstream out(path);
  if (!out) raise(Errc::IoError, "cannot open " + path);
  out << doc.dump() << "\n";
  if (!out) raise(Errc::IoError, "failed writing " + path);
}

#define DISCO_INSTANTIATE(T)                                                  \
  template BatchData<T> load_batch<T>(const datagen::DatasetReader&,          \
                                      const std::vector<std::int64_t>&);      \
  template LossBreakdown training_step<T>(Network<T>&, const BatchData<T>&,   \
                                          std::map<std::string, Tensor<T>>&,  \
                                          const StepConfig&);                 \
  template double validation_loss<T>(Network<T>&,                             \
                                     const datagen::DatasetReader&, int);     \
  template TrainResult train<T>(Network<T>&, const datagen::DatasetReader&,   \
                                const datagen::DatasetReader&,                \
                                const TrainConfig&, const std::string&);      \
  template void write_predictions_json<T>(                                    \
      Network<T>&, const datagen::DatasetReader&, const std::string&, int);

DISCO_INSTANTIATE(float)
DISCO_INSTANTIATE(double)
#undef DISCO_INSTANTIATE

}  // namespace disco::net
