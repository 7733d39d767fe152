// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/core/common.hpp"

#include <string>

namespace countx::nn {

using Eigen::Index;

/// A trainable tensor stored as a 2-D matrix together with its accumulated
/// gradient. Layers skip gradient accumulation when `trainable` is false.
template <typename Scalar>
struct Parameter {
  Mat<Scalar> value;
  Mat<Scalar> grad;
  bool trainable = true;
  /// Decoupled weight decay applies (off for biases, norms, embeddings).
  bool decay = true;

  /// Gradient storage is allocated lazily by zero_grad(), and only for
  /// trainable parameters.
  void resize(Index rows, Index cols) {
    value.setZero(rows, cols);
    grad.resize(0, 0);
  }
  void zero_grad() {
    if (trainable)
      grad.setZero(value.rows(), value.cols());
    else
      grad.resize(0, 0);
  }
  bool has_grad() const { return grad.size() == value.size(); }
};

/// Fills `m` with N(0, std^2) samples rejected outside +-2 std.
template <typename Scalar>
void truncated_normal(Mat<Scalar>& m, Scalar std, Rng& rng);

template <typename Scalar>
class Linear {
 public:
  Linear() = default;
  Linear(Index in_features, Index out_features, bool bias = true);

  void init(Rng& rng, Scalar std = Scalar(0.02));

  Index in_features() const { return weight.value.cols(); }
  Index out_features() const { return weight.value.rows(); }

  /// y = x W^T + b, one input vector per row of x.
  Mat<Scalar> forward(const Mat<Scalar>& x) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Mat<Scalar> backward(const Mat<Scalar>& x, const Mat<Scalar>& dy);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    if (has_bias_) f(prefix + "bias", bias);
  }

  Parameter<Scalar> weight;  // out x in
  Parameter<Scalar> bias;    // 1 x out

 private:
  bool has_bias_ = true;
};

/// Row-wise layer normalization (eps 1e-5).
template <typename Scalar>
class LayerNorm {
 public:
  struct Cache {
    Mat<Scalar> normalized;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std;
  };

  LayerNorm() = default;
  explicit LayerNorm(Index dim);

  Mat<Scalar> forward(const Mat<Scalar>& x, Cache* cache = nullptr) const;
  Mat<Scalar> backward(const Cache& cache, const Mat<Scalar>& dy);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "weight", gamma);
    f(prefix + "bias", beta);
  }

  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;
};

// Exact (erf) GELU.
template <typename Scalar>
Mat<Scalar> gelu(const Mat<Scalar>& x);
template <typename Scalar>
Mat<Scalar> gelu_backward(const Mat<Scalar>& x, const Mat<Scalar>& dy);

template <typename Scalar>
Mat<Scalar> relu(const Mat<Scalar>& x) {
  return x.cwiseMax(Scalar(0));
}
template <typename Scalar>
Mat<Scalar> relu_backward(const Mat<Scalar>& x, const Mat<Scalar>& dy) {
  return (x.array() > Scalar(0)).select(dy, Scalar(0));
}

}  // namespace countx::nn
