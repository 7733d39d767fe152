// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/nn/layers.hpp"

#include <cmath>
#include <numbers>

namespace countx::nn {

template <typename Scalar>
void truncated_normal(Mat<Scalar>& m, Scalar std, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < m.size(); ++i) {
    double z = normal(rng);
    while (std::abs(z) > 2.0) z = normal(rng);
    m.data()[i] = static_cast<Scalar>(z) * std;
  }
}

template <typename Scalar>
Linear<Scalar>::Linear(Index in_features, Index out_features, bool bias) : has_bias_(bias) {
  weight.resize(out_features, in_features);
  if (has_bias_) {
    this->bias.resize(1, out_features);
    this->bias.decay = false;
  }
}

template <typename Scalar>
void Linear<Scalar>::init(Rng& rng, Scalar std) {
  truncated_normal(weight.value, std, rng);
  if (has_bias_) bias.value.setZero();
}

template <typename Scalar>
Mat<Scalar> Linear<Scalar>::forward(const Mat<Scalar>& x) const {
  Mat<Scalar> y = x * weight.value.transpose();
  if (has_bias_) y.rowwise() += bias.value.row(0);
  return y;
}

template <typename Scalar>
Mat<Scalar> Linear<Scalar>::backward(const Mat<Scalar>& x, const Mat<Scalar>& dy) {
  if (weight.trainable) weight.grad.noalias() += dy.transpose() * x;
  if (has_bias_ && bias.trainable) bias.grad.row(0) += dy.colwise().sum();
  return dy * weight.value;
}

template <typename Scalar>
LayerNorm<Scalar>::LayerNorm(Index dim) {
  gamma.resize(1, dim);
  gamma.value.setOnes();
  gamma.decay = false;
  beta.resize(1, dim);
  beta.decay = false;
}

template <typename Scalar>
Mat<Scalar> LayerNorm<Scalar>::forward(const Mat<Scalar>& x, Cache* cache) const {
  constexpr Scalar eps = Scalar(1e-5);
  const Index n = x.cols();
  Mat<Scalar> normalized(x.rows(), n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).matrix();
    const Scalar var = centered.squaredNorm() / Scalar(n);
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    normalized.row(r) = centered * inv_std(r);
  }
  Mat<Scalar> y = normalized.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename Scalar>
Mat<Scalar> LayerNorm<Scalar>::backward(const Cache& cache, const Mat<Scalar>& dy) {
  const auto& xhat = cache.normalized;
  if (gamma.trainable) gamma.grad.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  if (beta.trainable) beta.grad.row(0) += dy.colwise().sum();
  Mat<Scalar> dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  Mat<Scalar> dx(dy.rows(), dy.cols());
  const Scalar inv_n = Scalar(1) / Scalar(dy.cols());
  for (Index r = 0; r < dy.rows(); ++r) {
    const Scalar mean_d = dxhat.row(r).sum() * inv_n;
    const Scalar mean_dx = dxhat.row(r).dot(xhat.row(r)) * inv_n;
    dx.row(r) = cache.inv_std(r) *
                (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

template <typename Scalar>
Mat<Scalar> gelu(const Mat<Scalar>& x) {
  const Scalar inv_sqrt2 = Scalar(1) / std::numbers::sqrt2_v<Scalar>;
  return x.unaryExpr([inv_sqrt2](Scalar v) {
    return Scalar(0.5) * v * (Scalar(1) + std::erf(v * inv_sqrt2));
  });
}

template <typename Scalar>
Mat<Scalar> gelu_backward(const Mat<Scalar>& x, const Mat<Scalar>& dy) {
  const Scalar inv_sqrt2 = Scalar(1) / std::numbers::sqrt2_v<Scalar>;
  const Scalar inv_sqrt2pi = std::numbers::inv_sqrtpi_v<Scalar> * inv_sqrt2;
  Mat<Scalar> d = x.unaryExpr([=](Scalar v) {
    return Scalar(0.5) * (Scalar(1) + std::erf(v * inv_sqrt2)) +
           v * inv_sqrt2pi * std::exp(Scalar(-0.5) * v * v);
  });
  return d.cwiseProduct(dy);
}

#define COUNTX_INSTANTIATE(S)                                                \
  template void truncated_normal<S>(Mat<S>&, S, Rng&);                       \
  template class Linear<S>;                                                  \
  template class LayerNorm<S>;                                               \
  template Mat<S> gelu<S>(const Mat<S>&);                                    \
  template Mat<S> gelu_backward<S>(const Mat<S>&, const Mat<S>&);

COUNTX_INSTANTIATE(float)
COUNTX_INSTANTIATE(double)
#undef COUNTX_INSTANTIATE

}  // namespace countx::nn
