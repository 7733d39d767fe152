// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/nn/layers.hpp"

#include <utility>
#include <vector>

namespace countx::nn {

/// Multi-head scaled dot-product attention with a packed q/k/v input
/// projection (3E x E) followed by an output projection. Queries come from
/// `xq`, keys and values from `xkv`; pass the same matrix twice for
/// self-attention.
template <typename Scalar>
class MultiHeadAttention {
 public:
  struct Cache {
    Mat<Scalar> q, k, v;              // projected, (tokens x E)
    std::vector<Mat<Scalar>> probs;   // per head, (Nq x Nk)
    Mat<Scalar> context;              // concatenated heads, (Nq x E)
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(Index embed_dim, Index num_heads);

  void init(Rng& rng);

  Index embed_dim() const { return in_proj_weight.value.cols(); }
  Index num_heads() const { return num_heads_; }

  Mat<Scalar> forward(const Mat<Scalar>& xq, const Mat<Scalar>& xkv, bool causal,
                      Cache* cache = nullptr) const;

  /// Returns (dL/dxq, dL/dxkv).
  std::pair<Mat<Scalar>, Mat<Scalar>> backward(const Mat<Scalar>& xq, const Mat<Scalar>& xkv,
                                               const Cache& cache, const Mat<Scalar>& dy);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "in_proj_weight", in_proj_weight);
    f(prefix + "in_proj_bias", in_proj_bias);
    out_proj.visit(prefix + "out_proj.", f);
  }

  Parameter<Scalar> in_proj_weight;  // 3E x E, rows ordered q, k, v
  Parameter<Scalar> in_proj_bias;    // 1 x 3E
  Linear<Scalar> out_proj;

 private:
  Index num_heads_ = 1;
};

}  // namespace countx::nn
