// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/model/counting_model.hpp"

#include <span>

namespace countx::train {

/// true marks a dropped pixel.
using DropMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Independent Bernoulli(drop_p) per pixel, one mask per map.
std::vector<DropMask> draw_drop_masks(std::size_t count, Eigen::Index rows, Eigen::Index cols, double drop_p,
                                      Rng& rng);

template <typename Scalar>
struct LossResult {
  double loss = 0.0;
  std::vector<Mat<Scalar>> grad;  // dL/dpred per map
};

/// Batch mean over maps of sum over kept pixels of (pred - target)^2,
/// divided by the full pixel count H*W. Targets are already multiplied by
/// the density scale. Throws InputError on any shape mismatch.
template <typename Scalar>
LossResult<Scalar> masked_loss(std::span<const Mat<Scalar>> pred, std::span<const Mat<double>> target,
                               std::span<const DropMask> dropped);

/// As above with masks drawn from `rng`.
template <typename Scalar>
LossResult<Scalar> masked_loss(std::span<const Mat<Scalar>> pred, std::span<const Mat<double>> target,
                               double drop_p, Rng& rng);

struct ScheduleConfig {
  double base_lr = 6.25e-6;
  double warmup_epochs = 10;
  double total_epochs = 1000;
};

/// Linear warmup from 0 to base_lr, then half-cycle cosine to 0 at
/// total_epochs. `epoch` is fractional and clamped to [0, total_epochs].
double lr_at(double epoch, const ScheduleConfig& schedule);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

/// Decoupled weight decay Adam over the trainable parameters of a model.
/// Parameters flagged decay = false skip the decay term.
template <typename Scalar>
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  /// One update using the accumulated gradients. Frozen parameters and
  /// parameters without gradients are left untouched.
  void step(CountingModel<Scalar>& model, double lr);

  std::size_t steps() const { return steps_; }
  const AdamWConfig& config() const { return config_; }

 private:
  struct Moments {
    Mat<Scalar> m, v;
    std::size_t t = 0;
  };
  AdamWConfig config_;
  std::vector<Moments> state_;
  std::size_t steps_ = 0;
};

}  // namespace countx::train
