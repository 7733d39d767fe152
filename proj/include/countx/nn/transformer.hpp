// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/nn/attention.hpp"

namespace countx::nn {

/// Position-wise feed-forward: Linear -> GELU -> Linear.
template <typename Scalar>
class Mlp {
 public:
  struct Cache {
    Mat<Scalar> hidden_pre;  // before GELU
    Mat<Scalar> hidden;      // after GELU
  };

  Mlp() = default;
  Mlp(Index dim, Index hidden_dim) : c_fc(dim, hidden_dim), c_proj(hidden_dim, dim) {}

  void init(Rng& rng) {
    c_fc.init(rng);
    c_proj.init(rng);
  }

  Mat<Scalar> forward(const Mat<Scalar>& x, Cache* cache = nullptr) const;
  Mat<Scalar> backward(const Mat<Scalar>& x, const Cache& cache, const Mat<Scalar>& dy);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    c_fc.visit(prefix + "c_fc.", f);
    c_proj.visit(prefix + "c_proj.", f);
  }

  Linear<Scalar> c_fc;
  Linear<Scalar> c_proj;
};

/// Pre-norm residual self-attention block:
///   x += attn(ln_1(x));  x += mlp(ln_2(x))
template <typename Scalar>
class EncoderBlock {
 public:
  struct Cache {
    Mat<Scalar> input, h1, mid, h2;
    typename LayerNorm<Scalar>::Cache ln_1, ln_2;
    typename MultiHeadAttention<Scalar>::Cache attn;
    typename Mlp<Scalar>::Cache mlp;
  };

  EncoderBlock() = default;
  EncoderBlock(Index dim, Index heads, Index mlp_dim, bool causal)
      : ln_1(dim), attn(dim, heads), ln_2(dim), mlp(dim, mlp_dim), causal_(causal) {}

  void init(Rng& rng) {
    attn.init(rng);
    mlp.init(rng);
  }

  Mat<Scalar> forward(const Mat<Scalar>& x, Cache* cache = nullptr) const;
  Mat<Scalar> backward(const Cache& cache, const Mat<Scalar>& dy);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    ln_1.visit(prefix + "ln_1.", f);
    attn.visit(prefix + "attn.", f);
    ln_2.visit(prefix + "ln_2.", f);
    mlp.visit(prefix + "mlp.", f);
  }

  LayerNorm<Scalar> ln_1;
  MultiHeadAttention<Scalar> attn;
  LayerNorm<Scalar> ln_2;
  Mlp<Scalar> mlp;

 private:
  bool causal_ = false;
};

/// Pre-norm transformer decoder block. Queries attend to each other, then to
/// an external memory (the text token), then pass through the MLP:
///   x += self_attn(ln_1(x));  x += cross_attn(ln_2(x), memory);  x += mlp(ln_3(x))
template <typename Scalar>
class DecoderBlock {
 public:
  struct Cache {
    Mat<Scalar> input, h1, mid1, h2, mid2, h3;
    typename LayerNorm<Scalar>::Cache ln_1, ln_2, ln_3;
    typename MultiHeadAttention<Scalar>::Cache self_attn, cross_attn;
    typename Mlp<Scalar>::Cache mlp;
  };

  DecoderBlock() = default;
  DecoderBlock(Index dim, Index heads, Index mlp_dim)
      : ln_1(dim), self_attn(dim, heads), ln_2(dim), cross_attn(dim, heads), ln_3(dim),
        mlp(dim, mlp_dim) {}

  void init(Rng& rng) {
    self_attn.init(rng);
    cross_attn.init(rng);
    mlp.init(rng);
  }

  Mat<Scalar> forward(const Mat<Scalar>& x, const Mat<Scalar>& memory,
                      Cache* cache = nullptr) const;
  /// Returns (dL/dx, dL/dmemory).
  std::pair<Mat<Scalar>, Mat<Scalar>> backward(const Mat<Scalar>& memory, const Cache& cache,
                                               const Mat<Scalar>& dy);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    ln_1.visit(prefix + "ln_1.", f);
    self_attn.visit(prefix + "self_attn.", f);
    ln_2.visit(prefix + "ln_2.", f);
    cross_attn.visit(prefix + "cross_attn.", f);
    ln_3.visit(prefix + "ln_3.", f);
    mlp.visit(prefix + "mlp.", f);
  }

  LayerNorm<Scalar> ln_1;
  MultiHeadAttention<Scalar> self_attn;
  LayerNorm<Scalar> ln_2;
  MultiHeadAttention<Scalar> cross_attn;
  LayerNorm<Scalar> ln_3;
  Mlp<Scalar> mlp;
};

}  // namespace countx::nn
