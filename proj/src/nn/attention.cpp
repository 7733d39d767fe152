// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/nn/attention.hpp"

#include <cmath>
#include <limits>

namespace countx::nn {

template <typename Scalar>
MultiHeadAttention<Scalar>::MultiHeadAttention(Index embed_dim, Index num_heads)
    : out_proj(embed_dim, embed_dim), num_heads_(num_heads) {
  if (num_heads <= 0 || embed_dim % num_heads != 0)
    throw ConfigError("attention: embed_dim " + std::to_string(embed_dim) +
                      " not divisible by num_heads " + std::to_string(num_heads));
  in_proj_weight.resize(3 * embed_dim, embed_dim);
  in_proj_bias.resize(1, 3 * embed_dim);
  in_proj_bias.decay = false;
}

template <typename Scalar>
void MultiHeadAttention<Scalar>::init(Rng& rng) {
  truncated_normal(in_proj_weight.value, Scalar(0.02), rng);
  in_proj_bias.value.setZero();
  out_proj.init(rng);
}

template <typename Scalar>
Mat<Scalar> MultiHeadAttention<Scalar>::forward(const Mat<Scalar>& xq, const Mat<Scalar>& xkv,
                                                bool causal, Cache* cache) const {
  const Index e = embed_dim();
  if (xq.cols() != e || xkv.cols() != e)
    throw ConfigError("attention: input width does not match embed_dim " + std::to_string(e));
  const Index d = e / num_heads_;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(d));
  const auto& w = in_proj_weight.value;
  const auto& b = in_proj_bias.value;

  Mat<Scalar> q = xq * w.topRows(e).transpose();
  q.rowwise() += b.leftCols(e).row(0);
  Mat<Scalar> k = xkv * w.middleRows(e, e).transpose();
  k.rowwise() += b.middleCols(e, e).row(0);
  Mat<Scalar> v = xkv * w.bottomRows(e).transpose();
  v.rowwise() += b.rightCols(e).row(0);

  const Index nq = xq.rows();
  const Index nk = xkv.rows();
  Mat<Scalar> context(nq, e);
  std::vector<Mat<Scalar>> probs;
  if (cache) probs.reserve(num_heads_);
  for (Index h = 0; h < num_heads_; ++h) {
    Mat<Scalar> s = (q.middleCols(h * d, d) * k.middleCols(h * d, d).transpose()) * scale;
    for (Index i = 0; i < nq; ++i) {
      if (causal) {
        for (Index j = i + 1; j < nk; ++j) s(i, j) = -std::numeric_limits<Scalar>::infinity();
      }
      const Scalar m = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - m).exp().matrix();
      s.row(i) /= s.row(i).sum();
    }
    context.middleCols(h * d, d).noalias() = s * v.middleCols(h * d, d);
    if (cache) probs.push_back(std::move(s));
  }
  Mat<Scalar> y = out_proj.forward(context);
  if (cache) {
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->context = std::move(context);
  }
  return y;
}

template <typename Scalar>
std::pair<Mat<Scalar>, Mat<Scalar>> MultiHeadAttention<Scalar>::backward(
    const Mat<Scalar>& xq, const Mat<Scalar>& xkv, const Cache& cache, const Mat<Scalar>& dy) {
  const Index e = embed_dim();
  const Index d = e / num_heads_;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(d));

  const Mat<Scalar> dctx = out_proj.backward(cache.context, dy);
  Mat<Scalar> dq(xq.rows(), e), dk(xkv.rows(), e), dv(xkv.rows(), e);
  for (Index h = 0; h < num_heads_; ++h) {
    const auto& p = cache.probs[h];
    const auto dctx_h = dctx.middleCols(h * d, d);
    Mat<Scalar> dp = dctx_h * cache.v.middleCols(h * d, d).transpose();
    dv.middleCols(h * d, d).noalias() = p.transpose() * dctx_h;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_dot =
        (dp.array() * p.array()).rowwise().sum();
    Mat<Scalar> ds = (p.array() * (dp.array().colwise() - row_dot.array())).matrix() * scale;
    dq.middleCols(h * d, d).noalias() = ds * cache.k.middleCols(h * d, d);
    dk.middleCols(h * d, d).noalias() = ds.transpose() * cache.q.middleCols(h * d, d);
  }

  const auto& w = in_proj_weight.value;
  if (in_proj_weight.trainable) {
    auto& g = in_proj_weight.grad;
    g.topRows(e).noalias() += dq.transpose() * xq;
    g.middleRows(e, e).noalias() += dk.transpose() * xkv;
    g.bottomRows(e).noalias() += dv.transpose() * xkv;
  }
  if (in_proj_bias.trainable) {
    auto& g = in_proj_bias.grad;
    g.leftCols(e).row(0) += dq.colwise().sum();
    g.middleCols(e, e).row(0) += dk.colwise().sum();
    g.rightCols(e).row(0) += dv.colwise().sum();
  }
  Mat<Scalar> dxq = dq * w.topRows(e);
  Mat<Scalar> dxkv = dk * w.middleRows(e, e) + dv * w.bottomRows(e);
  return {std::move(dxq), std::move(dxkv)};
}

template class MultiHeadAttention<float>;
template class MultiHeadAttention<double>;

}  // namespace countx::nn
