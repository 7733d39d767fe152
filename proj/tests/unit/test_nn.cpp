// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/nn/attention.hpp"
#include "countx/nn/conv.hpp"
#include "countx/nn/layers.hpp"
#include "countx/nn/transformer.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace countx;
using countx::testing::relative_error;
using M = Mat<double>;

namespace {

M random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  M m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

template <class Module>
void randomize(Module& m, Rng& rng, double scale) {
  m.visit("", [&](const std::string&, nn::Parameter<double>& p) {
    p.value = random_mat(p.value.rows(), p.value.cols(), rng, scale);
  });
}

// Central difference of loss() w.r.t. every entry of `x` (or a strided subset).
void check_gradient(M& x, const M& analytic, const std::function<double()>& loss,
                    Eigen::Index stride = 1) {
  REQUIRE(analytic.rows() == x.rows());
  REQUIRE(analytic.cols() == x.cols());
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < x.size(); i += stride) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = loss();
    x.data()[i] = saved - h;
    const double down = loss();
    x.data()[i] = saved;
    const double numeric = (up - down) / (2 * h);
    CHECK(relative_error(numeric, analytic.data()[i], 1e-3) < 1e-5);
  }
}

}  // namespace

TEST_CASE("linear forward is x W^T + b") {
  Rng rng(1);
  nn::Linear<double> lin(3, 2);
  lin.init(rng);
  lin.bias.value << 0.5, -0.25;
  const M x = random_mat(4, 3, rng);
  const M y = lin.forward(x);
  for (int r = 0; r < 4; ++r)
    for (int o = 0; o < 2; ++o) {
      double acc = lin.bias.value(0, o);
      for (int i = 0; i < 3; ++i) acc += x(r, i) * lin.weight.value(o, i);
      CHECK(y(r, o) == doctest::Approx(acc).epsilon(1e-14));
    }
}

TEST_CASE("linear gradients") {
  Rng rng(2);
  nn::Linear<double> lin(5, 4);
  lin.init(rng, 0.5);
  lin.bias.value = random_mat(1, 4, rng);
  M x = random_mat(3, 5, rng);
  const M w = random_mat(3, 4, rng);
  const auto loss = [&] { return (lin.forward(x).array() * w.array()).sum(); };
  lin.weight.zero_grad();
  lin.bias.zero_grad();
  const M dx = lin.backward(x, w);
  check_gradient(x, dx, loss);
  check_gradient(lin.weight.value, lin.weight.grad, loss);
  check_gradient(lin.bias.value, lin.bias.grad, loss);
}

TEST_CASE("frozen linear accumulates no gradient") {
  Rng rng(3);
  nn::Linear<double> lin(2, 2);
  lin.init(rng);
  lin.weight.trainable = false;
  lin.weight.zero_grad();
  lin.bias.zero_grad();
  lin.backward(random_mat(2, 2, rng), random_mat(2, 2, rng));
  CHECK_FALSE(lin.weight.has_grad());
  CHECK(lin.bias.has_grad());
}

TEST_CASE("layer norm normalizes rows and has correct gradients") {
  Rng rng(4);
  nn::LayerNorm<double> ln(6);
  ln.gamma.value = random_mat(1, 6, rng);
  ln.beta.value = random_mat(1, 6, rng);
  M x = random_mat(3, 6, rng, 3.0);

  nn::LayerNorm<double> plain(6);
  const M y0 = plain.forward(x);
  for (int r = 0; r < 3; ++r) {
    CHECK(std::abs(y0.row(r).mean()) < 1e-12);
    CHECK((y0.row(r).array().square().mean()) == doctest::Approx(1.0).epsilon(1e-4));
  }

  const M w = random_mat(3, 6, rng);
  const auto loss = [&] { return (ln.forward(x).array() * w.array()).sum(); };
  nn::LayerNorm<double>::Cache cache;
  ln.forward(x, &cache);
  ln.gamma.zero_grad();
  ln.beta.zero_grad();
  const M dx = ln.backward(cache, w);
  check_gradient(x, dx, loss);
  check_gradient(ln.gamma.value, ln.gamma.grad, loss);
  check_gradient(ln.beta.value, ln.beta.grad, loss);
}

TEST_CASE("gelu matches the erf form and its derivative") {
  Rng rng(5);
  M x = random_mat(2, 7, rng, 2.0);
  const M y = nn::gelu(x);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    CHECK(y.data()[i] == doctest::Approx(0.5 * v * (1 + std::erf(v / std::sqrt(2.0)))));
  }
  const M w = random_mat(2, 7, rng);
  const M dx = nn::gelu_backward(x, w);
  check_gradient(x, dx, [&] { return (nn::gelu(x).array() * w.array()).sum(); });
}

TEST_CASE("single key cross-attention returns the projected value for every query") {
  Rng rng(6);
  const Eigen::Index e = 8;
  nn::MultiHeadAttention<double> attn(e, 2);
  attn.init(rng);
  attn.in_proj_bias.value = random_mat(1, 3 * e, rng, 0.1);
  const M queries = random_mat(5, e, rng);
  const M key = random_mat(1, e, rng);
  const M out = attn.forward(queries, key, false);

  const M wv = attn.in_proj_weight.value.middleRows(2 * e, e);
  const M bv = attn.in_proj_bias.value.rightCols(e);
  const M value = key * wv.transpose() + bv;
  const M expected = attn.out_proj.forward(value);
  for (Eigen::Index r = 0; r < queries.rows(); ++r)
    for (Eigen::Index c = 0; c < e; ++c) CHECK(out(r, c) == doctest::Approx(expected(0, c)).epsilon(1e-12));
}

TEST_CASE("causal attention ignores later tokens") {
  Rng rng(7);
  nn::MultiHeadAttention<double> attn(8, 4);
  attn.init(rng);
  randomize(attn, rng, 0.3);
  M x = random_mat(6, 8, rng);
  const M before = attn.forward(x, x, true);
  x.row(5) = random_mat(1, 8, rng);
  const M after = attn.forward(x, x, true);
  CHECK(before.topRows(5) == after.topRows(5));
  CHECK(before.row(5) != after.row(5));
}

TEST_CASE("attention gradients") {
  Rng rng(8);
  nn::MultiHeadAttention<double> attn(6, 3);
  attn.init(rng);
  randomize(attn, rng, 0.4);
  for (bool causal : {false, true}) {
    M q = random_mat(4, 6, rng);
    M kv = causal ? q : random_mat(3, 6, rng);
    const M w = random_mat(4, 6, rng);
    if (causal) {
      // Self-attention: q and kv are the same tensor, so gradients add.
      const auto loss = [&] { return (attn.forward(q, q, true).array() * w.array()).sum(); };
      nn::MultiHeadAttention<double>::Cache cache;
      attn.forward(q, q, true, &cache);
      attn.visit("", [](const std::string&, nn::Parameter<double>& p) { p.zero_grad(); });
      const auto [dq, dkv] = attn.backward(q, q, cache, w);
      check_gradient(q, dq + dkv, loss);
    } else {
      const auto loss = [&] { return (attn.forward(q, kv, false).array() * w.array()).sum(); };
      nn::MultiHeadAttention<double>::Cache cache;
      attn.forward(q, kv, false, &cache);
      attn.visit("", [](const std::string&, nn::Parameter<double>& p) { p.zero_grad(); });
      const auto [dq, dkv] = attn.backward(q, kv, cache, w);
      check_gradient(q, dq, loss);
      check_gradient(kv, dkv, loss);
      check_gradient(attn.in_proj_weight.value, attn.in_proj_weight.grad, loss, 5);
      check_gradient(attn.in_proj_bias.value, attn.in_proj_bias.grad, loss);
      check_gradient(attn.out_proj.weight.value, attn.out_proj.weight.grad, loss, 3);
    }
  }
}

TEST_CASE("attention rejects a head count that does not divide the width") {
  CHECK_THROWS_AS(nn::MultiHeadAttention<double>(10, 4), ConfigError);
}

TEST_CASE("decoder block gradients w.r.t. input and memory") {
  Rng rng(9);
  nn::DecoderBlock<double> block(8, 2, 4);
  block.init(rng);
  randomize(block, rng, 0.3);
  M x = random_mat(5, 8, rng);
  M mem = random_mat(1, 8, rng);
  const M w = random_mat(5, 8, rng);
  const auto loss = [&] { return (block.forward(x, mem).array() * w.array()).sum(); };
  nn::DecoderBlock<double>::Cache cache;
  block.forward(x, mem, &cache);
  block.visit("", [](const std::string&, nn::Parameter<double>& p) { p.zero_grad(); });
  const auto [dx, dmem] = block.backward(mem, cache, w);
  check_gradient(x, dx, loss);
  check_gradient(mem, dmem, loss);
  check_gradient(block.mlp.c_fc.weight.value, block.mlp.c_fc.weight.grad, loss, 7);
}

TEST_CASE("conv2d matches direct convolution with zero padding") {
  Rng rng(10);
  const nn::Extent ext{5, 7};
  for (Eigen::Index k : {1, 3}) {
    nn::Conv2d<double> conv(2, 3, k);
    conv.init(rng, 0.5);
    conv.bias.value = random_mat(1, 3, rng);
    const M x = random_mat(2, ext.pixels(), rng);
    const M y = conv.forward(x, ext);
    REQUIRE(y.rows() == 3);
    REQUIRE(y.cols() == ext.pixels());
    const Eigen::Index pad = k / 2;
    for (Eigen::Index o = 0; o < 3; ++o)
      for (Eigen::Index yy = 0; yy < ext.height; ++yy)
        for (Eigen::Index xx = 0; xx < ext.width; ++xx) {
          double acc = conv.bias.value(0, o);
          for (Eigen::Index c = 0; c < 2; ++c)
            for (Eigen::Index ky = 0; ky < k; ++ky)
              for (Eigen::Index kx = 0; kx < k; ++kx) {
                const Eigen::Index sy = yy + ky - pad, sx = xx + kx - pad;
                if (sy < 0 || sx < 0 || sy >= ext.height || sx >= ext.width) continue;
                acc += conv.weight.value(o, (c * k + ky) * k + kx) * x(c, sy * ext.width + sx);
              }
          CHECK(y(o, yy * ext.width + xx) == doctest::Approx(acc).epsilon(1e-12));
        }
  }
}

TEST_CASE("conv2d gradients") {
  Rng rng(11);
  const nn::Extent ext{4, 6};
  nn::Conv2d<double> conv(3, 2, 3);
  conv.init(rng, 0.5);
  M x = random_mat(3, ext.pixels(), rng);
  const M w = random_mat(2, ext.pixels(), rng);
  const auto loss = [&] { return (conv.forward(x, ext).array() * w.array()).sum(); };
  conv.weight.zero_grad();
  conv.bias.zero_grad();
  const M dx = conv.backward(x, ext, w);
  check_gradient(x, dx, loss);
  check_gradient(conv.weight.value, conv.weight.grad, loss);
  check_gradient(conv.bias.value, conv.bias.grad, loss);
}

TEST_CASE("linear interpolation matrix follows half-pixel centres") {
  for (auto [in, out] : {std::pair{14, 24}, std::pair{24, 14}, std::pair{3, 8}, std::pair{1, 5}}) {
    const M m = nn::linear_interpolation_matrix<double>(in, out);
    REQUIRE(m.rows() == out);
    REQUIRE(m.cols() == in);
    for (int o = 0; o < out; ++o) {
      const double src = std::max(0.0, (o + 0.5) * in / out - 0.5);
      const int i0 = std::min(static_cast<int>(std::floor(src)), in - 1);
      const int i1 = std::min(i0 + 1, in - 1);
      const double t = src - i0;
      M expected = M::Zero(1, in);
      expected(0, i0) += 1 - t;
      expected(0, i1) += t;
      CHECK((m.row(o) - expected).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(m.row(o).sum() == doctest::Approx(1.0));
    }
  }
  CHECK(nn::linear_interpolation_matrix<double>(6, 6) == M::Identity(6, 6));
}

TEST_CASE("bilinear resize backward is the adjoint") {
  Rng rng(12);
  const nn::BilinearResize<double> resize({3, 5}, {8, 6});
  const M x = random_mat(2, 15, rng);
  const M dy = random_mat(2, 48, rng);
  const double lhs = (resize.forward(x).array() * dy.array()).sum();
  const double rhs = (x.array() * resize.backward(dy).array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
