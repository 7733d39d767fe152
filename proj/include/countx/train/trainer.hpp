// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/augment/augment.hpp"
#include "countx/infer/sliding_window.hpp"
#include "countx/model/checkpoint.hpp"
#include "countx/train/objective.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>

namespace countx::train {

struct FreezeConfig {
  bool text_encoder = true;
  bool image_encoder = false;
};

struct TrainConfig {
  std::size_t batch_size = 8;
  double base_lr = 6.25e-6;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.05;
  double warmup_epochs = 10;
  int total_epochs = 1000;
  double density_scale = 60.0;
  double pixel_drop_p = 0.2;
  std::uint64_t seed = 1234;
  FreezeConfig freeze;
  /// Augmentation workers per batch; 0 uses the hardware concurrency.
  int workers = 1;
  augment::AugmentConfig augment;
  infer::InferenceConfig validation;

  /// Throws ConfigError.
  void validate() const;
  ScheduleConfig schedule() const { return {base_lr, warmup_epochs, static_cast<double>(total_epochs)}; }
  AdamWConfig optimizer() const { return {beta1, beta2, eps, weight_decay}; }
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults; the result is validated.
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Random access to a split's samples.
struct SampleSource {
  std::size_t size = 0;
  std::function<data::LoadedSample(std::size_t)> load;
};

SampleSource memory_source(std::vector<data::LoadedSample> samples);
/// Decodes images on demand.
SampleSource record_source(std::vector<data::SampleRecord> records);

/// Raised when a batch produces a non-finite loss.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Applies cfg.freeze; interaction and decoder always train.
template <typename Scalar>
void apply_freeze(CountingModel<Scalar>& model, const FreezeConfig& freeze);

struct EpochStats {
  double mean_loss = 0.0;
  double last_lr = 0.0;
  std::size_t steps = 0;
};

/// One pass over `source` in a seeded shuffled order (epoch is 1-based).
/// Each sample is augmented, turned into a scaled density target and fed
/// forward; every batch takes one optimizer step at lr_at(epoch - 1 +
/// batch / batches).
template <typename Scalar>
EpochStats train_epoch(CountingModel<Scalar>& model, AdamW<Scalar>& optimizer, const SampleSource& source,
                       const Tokenizer& tokenizer, const TrainConfig& config, int epoch);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;
  double val_rmse = 0.0;
  double lr = 0.0;
};

void to_json(nlohmann::json& j, const EpochRecord& r);

/// Index of the minimal val MAE, earliest on ties. Throws InputError when
/// empty.
std::size_t select_best_epoch(std::span<const EpochRecord> records);

/// Validation MAE/RMSE of `model` via sliding-window inference.
template <typename Scalar>
std::pair<double, double> validate_model(const CountingModel<Scalar>& model,
                                         std::shared_ptr<const Tokenizer> tokenizer, const SampleSource& val,
                                         const infer::InferenceConfig& config);

struct FitOptions {
  /// When set: best.safetensors, last.safetensors and metrics.jsonl.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

template <typename Scalar>
struct FitResult {
  Checkpoint<Scalar> best;
  std::size_t best_index = 0;
  std::vector<EpochRecord> records;
};

/// Trains for cfg.total_epochs, validating after every epoch, and keeps the
/// parameters of the epoch with minimal val MAE. Throws ConfigError for an
/// empty split.
template <typename Scalar>
FitResult<Scalar> fit(CountingModel<Scalar>& model, const SampleSource& train, const SampleSource& val,
                      std::shared_ptr<const Tokenizer> tokenizer, const TrainConfig& config,
                      const FitOptions& options = {});

}  // namespace countx::train
