// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/train/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace countx::train {

namespace {
using RowArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}  // namespace

std::vector<DropMask> draw_drop_masks(std::size_t count, Eigen::Index rows, Eigen::Index cols, double drop_p,
                                      Rng& rng) {
  if (!(drop_p >= 0.0 && drop_p <= 1.0)) throw InputError("drop probability must lie in [0, 1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DropMask> masks(count, DropMask(rows, cols));
  for (auto& m : masks)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng) < drop_p;
  return masks;
}

template <typename Scalar>
LossResult<Scalar> masked_loss(std::span<const Mat<Scalar>> pred, std::span<const Mat<double>> target,
                               std::span<const DropMask> dropped) {
  if (pred.empty()) throw InputError("loss: empty batch");
  if (pred.size() != target.size() || pred.size() != dropped.size())
    throw InputError("loss: batch sizes differ");
  LossResult<Scalar> out;
  out.grad.reserve(pred.size());
  const double batch = static_cast<double>(pred.size());
  for (std::size_t b = 0; b < pred.size(); ++b) {
    const auto& p = pred[b];
    if (p.rows() != target[b].rows() || p.cols() != target[b].cols() || p.rows() != dropped[b].rows() ||
        p.cols() != dropped[b].cols())
      throw InputError("loss: prediction " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                       " does not match target " + std::to_string(target[b].rows()) + "x" +
                       std::to_string(target[b].cols()));
    const double pixels = static_cast<double>(p.size());
    const RowArray keep = (!dropped[b]).template cast<double>();
    const RowArray diff = (p.template cast<double>() - target[b]).array() * keep;
    out.loss += diff.square().sum() / pixels / batch;
    out.grad.push_back((diff * (2.0 / (pixels * batch))).matrix().template cast<Scalar>());
  }
  return out;
}

template <typename Scalar>
LossResult<Scalar> masked_loss(std::span<const Mat<Scalar>> pred, std::span<const Mat<double>> target,
                               double drop_p, Rng& rng) {
  if (pred.empty()) throw InputError("loss: empty batch");
  const auto masks = draw_drop_masks(pred.size(), pred[0].rows(), pred[0].cols(), drop_p, rng);
  return masked_loss(pred, target, std::span<const DropMask>(masks));
}

template LossResult<float> masked_loss(std::span<const Mat<float>>, std::span<const Mat<double>>,
                                       std::span<const DropMask>);
template LossResult<double> masked_loss(std::span<const Mat<double>>, std::span<const Mat<double>>,
                                        std::span<const DropMask>);
template LossResult<float> masked_loss(std::span<const Mat<float>>, std::span<const Mat<double>>, double, Rng&);
template LossResult<double> masked_loss(std::span<const Mat<double>>, std::span<const Mat<double>>, double, Rng&);

double lr_at(double epoch, const ScheduleConfig& s) {
  epoch = std::clamp(epoch, 0.0, s.total_epochs);
  if (epoch < s.warmup_epochs) return s.base_lr * epoch / s.warmup_epochs;
  const double progress = (epoch - s.warmup_epochs) / (s.total_epochs - s.warmup_epochs);
  return s.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename Scalar>
void AdamW<Scalar>::step(CountingModel<Scalar>& model, double lr) {
  ++steps_;
  std::size_t index = 0;
  const Scalar b1 = static_cast<Scalar>(config_.beta1), b2 = static_cast<Scalar>(config_.beta2);
  model.visit_parameters([&](const std::string&, nn::Parameter<Scalar>& p) {
    if (state_.size() <= index) state_.resize(index + 1);
    Moments& s = state_[index++];
    if (!p.trainable || !p.has_grad()) return;
    if (s.m.size() != p.value.size()) {
      s.m.setZero(p.value.rows(), p.value.cols());
      s.v.setZero(p.value.rows(), p.value.cols());
      s.t = 0;
    }
    ++s.t;
    if (p.decay && config_.weight_decay != 0.0)
      p.value *= static_cast<Scalar>(1.0 - lr * config_.weight_decay);
    s.m = b1 * s.m + (Scalar(1) - b1) * p.grad;
    s.v = b2 * s.v + (Scalar(1) - b2) * p.grad.cwiseProduct(p.grad);
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(s.t));
    const Scalar step = static_cast<Scalar>(lr / c1);
    const Scalar root_c2 = static_cast<Scalar>(std::sqrt(c2));
    const Scalar eps = static_cast<Scalar>(config_.eps);
    p.value.array() -= step * s.m.array() / (s.v.array().sqrt() / root_c2 + eps);
  });
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace countx::train
