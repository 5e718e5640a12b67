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

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "disco/datagen/datagen.hpp"
#include "disco/net/network.hpp"

namespace disco::net {

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch = 100;
  /// Per-batch counts of full/truncated/multiObject samples; must sum to
  /// `batch`.
  std::array<int, 3> batch_mix = {50, 20, 30};
  int max_epochs = 10;
  /// Plateau rule: validation loss must improve by at least this fraction
  /// of the best seen, else the evaluation counts as stale; after
  /// `plateau_patience` consecutive stale evaluations the learning rate is
  /// divided by 10, at most `max_lr_drops` times. A plateau after the last
  /// allowed drop stops training early.
  double plateau_improvement = 0.01;
  int plateau_patience = 5;
  int max_lr_drops = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  int epochs = 0;
  int steps = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int lr_drops = 0;
  bool interrupted = false;
  std::string best_checkpoint, last_checkpoint, log_path;
};

template <typename T>
struct BatchData {
  Tensor<T> images;  // [N,H,W,C], u8/255
  Targets<T> targets;
};

/// Decodes dataset records into a training batch.
template <typename T>
BatchData<T> load_batch(const datagen::DatasetReader& reader,
                        const std::vector<std::int64_t>& indices);

struct StepConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t dropout_key = 0;
};

/// One optimization step: forward, backward, finiteness pre-scan, SGD update.
/// Throws NonFiniteGradient before touching any weight when a gradient is
/// non-finite. With every head weight zero the update is skipped entirely.
template <typename T>
LossBreakdown training_step(Network<T>& net, const BatchData<T>& batch,
                            std::map<std::string, Tensor<T>>& velocities,
                            const StepConfig& config);

/// Lambda-weighted validation loss over the whole set (eval-mode forward).
template <typename T>
double validation_loss(Network<T>& net, const datagen::DatasetReader& data,
                       int batch);

/// Full recipe: shuffled 50/20/30 batches, per-epoch validation, plateau lr
/// schedule, best/last checkpoints and a CSV log under out_dir. SIGINT
/// checkpoints to interrupt.dscw and returns early.
template <typename T>
TrainResult train(Network<T>& net, const datagen::DatasetReader& train_data,
                  const datagen::DatasetReader& val_data,
                  const TrainConfig& config, const std::string& out_dir);

/// Eval-mode inference over a dataset; head outputs per sample as JSON
/// (only the concepts this variant predicts).
template <typename T>
void write_predictions_json(Network<T>& net,
                            const datagen::DatasetReader& data,
                            const std::string& path, int batch);

/// SIGINT flag plumbing (installed by train()).
void install_sigint_handler();
bool interrupt_requested();
void clear_interrupt();

}  // namespace disco::net
