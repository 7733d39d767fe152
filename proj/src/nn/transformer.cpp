// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/nn/transformer.hpp"

namespace countx::nn {

template <typename Scalar>
Mat<Scalar> Mlp<Scalar>::forward(const Mat<Scalar>& x, Cache* cache) const {
  Mat<Scalar> pre = c_fc.forward(x);
  Mat<Scalar> hidden = gelu(pre);
  Mat<Scalar> y = c_proj.forward(hidden);
  if (cache) {
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return y;
}

template <typename Scalar>
Mat<Scalar> Mlp<Scalar>::backward(const Mat<Scalar>& x, const Cache& cache,
                                  const Mat<Scalar>& dy) {
  const Mat<Scalar> dhidden = c_proj.backward(cache.hidden, dy);
  return c_fc.backward(x, gelu_backward(cache.hidden_pre, dhidden));
}

template <typename Scalar>
Mat<Scalar> EncoderBlock<Scalar>::forward(const Mat<Scalar>& x, Cache* cache) const {
  if (!cache) {
    Mat<Scalar> mid = x;
    const Mat<Scalar> h1 = ln_1.forward(x);
    mid += attn.forward(h1, h1, causal_);
    Mat<Scalar> out = mid;
    out += mlp.forward(ln_2.forward(mid));
    return out;
  }
  cache->input = x;
  cache->h1 = ln_1.forward(x, &cache->ln_1);
  cache->mid = x + attn.forward(cache->h1, cache->h1, causal_, &cache->attn);
  cache->h2 = ln_2.forward(cache->mid, &cache->ln_2);
  return cache->mid + mlp.forward(cache->h2, &cache->mlp);
}

template <typename Scalar>
Mat<Scalar> EncoderBlock<Scalar>::backward(const Cache& cache, const Mat<Scalar>& dy) {
  Mat<Scalar> dmid = dy;
  dmid += ln_2.backward(cache.ln_2, mlp.backward(cache.h2, cache.mlp, dy));
  auto [dq, dkv] = attn.backward(cache.h1, cache.h1, cache.attn, dmid);
  Mat<Scalar> dx = dmid;
  dx += ln_1.backward(cache.ln_1, dq + dkv);
  return dx;
}

template <typename Scalar>
Mat<Scalar> DecoderBlock<Scalar>::forward(const Mat<Scalar>& x, const Mat<Scalar>& memory,
                                          Cache* cache) const {
  if (!cache) {
    const Mat<Scalar> h1 = ln_1.forward(x);
    Mat<Scalar> mid1 = x + self_attn.forward(h1, h1, false);
    Mat<Scalar> mid2 = mid1 + cross_attn.forward(ln_2.forward(mid1), memory, false);
    return mid2 + mlp.forward(ln_3.forward(mid2));
  }
  cache->input = x;
  cache->h1 = ln_1.forward(x, &cache->ln_1);
  cache->mid1 = x + self_attn.forward(cache->h1, cache->h1, false, &cache->self_attn);
  cache->h2 = ln_2.forward(cache->mid1, &cache->ln_2);
  cache->mid2 = cache->mid1 + cross_attn.forward(cache->h2, memory, false, &cache->cross_attn);
  cache->h3 = ln_3.forward(cache->mid2, &cache->ln_3);
  return cache->mid2 + mlp.forward(cache->h3, &cache->mlp);
}

template <typename Scalar>
std::pair<Mat<Scalar>, Mat<Scalar>> DecoderBlock<Scalar>::backward(const Mat<Scalar>& memory,
                                                                   const Cache& cache,
                                                                   const Mat<Scalar>& dy) {
  Mat<Scalar> dmid2 = dy;
  dmid2 += ln_3.backward(cache.ln_3, mlp.backward(cache.h3, cache.mlp, dy));
  auto [dh2, dmemory] = cross_attn.backward(cache.h2, memory, cache.cross_attn, dmid2);
  Mat<Scalar> dmid1 = dmid2;
  dmid1 += ln_2.backward(cache.ln_2, dh2);
  auto [dq, dkv] = self_attn.backward(cache.h1, cache.h1, cache.self_attn, dmid1);
  Mat<Scalar> dx = dmid1;
  dx += ln_1.backward(cache.ln_1, dq + dkv);
  return {std::move(dx), std::move(dmemory)};
}

template class Mlp<float>;
template class Mlp<double>;
template class EncoderBlock<float>;
template class EncoderBlock<double>;
template class DecoderBlock<float>;
template class DecoderBlock<double>;

}  // namespace countx::nn
