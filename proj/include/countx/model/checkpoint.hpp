// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/model/counting_model.hpp"

#include <filesystem>
#include <limits>
#include <map>
#include <optional>

namespace countx {

struct CheckpointMetadata {
  int epoch = 0;
  double val_mae = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 1234;
  std::string model_id;
};

/// In-memory parameter snapshot.
template <typename Scalar>
struct Checkpoint {
  ModelConfig config;
  CheckpointMetadata metadata;
  std::map<std::string, Mat<Scalar>> parameters;
};

template <typename Scalar>
Checkpoint<Scalar> snapshot(const CountingModel<Scalar>& model, CheckpointMetadata metadata = {});

/// Copies parameter values into `model`. Throws ConfigError when the config
/// or any parameter shape differs.
template <typename Scalar>
void restore(CountingModel<Scalar>& model, const Checkpoint<Scalar>& checkpoint);

/// Single-file archive: named tensors (native dtype), plus header metadata
/// holding the JSON config, epoch, val MAE, seed and a payload digest.
template <typename Scalar>
void write_checkpoint(const Checkpoint<Scalar>& checkpoint, const std::filesystem::path& path);

/// Throws LoadError for unreadable/corrupt files, ConfigError when
/// `expected_config` is given and differs from the stored one.
template <typename Scalar>
Checkpoint<Scalar> read_checkpoint(const std::filesystem::path& path,
                                   const std::optional<ModelConfig>& expected_config = {});

template <typename Scalar>
void save_checkpoint(const CountingModel<Scalar>& model, const std::filesystem::path& path,
                     const CheckpointMetadata& metadata = {}) {
  write_checkpoint(snapshot(model, metadata), path);
}

template <typename Scalar>
CountingModel<Scalar> load_checkpoint(const std::filesystem::path& path,
                                      CheckpointMetadata* metadata = nullptr,
                                      const std::optional<ModelConfig>& expected_config = {}) {
  const auto ck = read_checkpoint<Scalar>(path, expected_config);
  CountingModel<Scalar> model(ck.config);
  restore(model, ck);
  if (metadata) *metadata = ck.metadata;
  return model;
}

}  // namespace countx
