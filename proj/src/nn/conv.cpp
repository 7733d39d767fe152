// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/nn/conv.hpp"

#include <algorithm>
#include <cmath>

namespace countx::nn {

namespace {

// Bounds the im2col scratch buffer to roughly this many output pixels.
constexpr Index kChunkPixels = 4096;

template <typename Scalar>
void im2col(const Mat<Scalar>& x, Extent ext, Index k, Index row_begin, Index row_end,
            Mat<Scalar>& cols) {
  const Index cin = x.rows();
  const Index pad = k / 2;
  const Index w = ext.width;
  const Index n = (row_end - row_begin) * w;
  cols.setZero(cin * k * k, n);
  for (Index c = 0; c < cin; ++c) {
    const Scalar* src = x.row(c).data();
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        Scalar* dst = cols.row((c * k + ky) * k + kx).data();
        for (Index y = row_begin; y < row_end; ++y) {
          const Index sy = y + ky - pad;
          if (sy < 0 || sy >= ext.height) continue;
          const Index x0 = std::max<Index>(0, pad - kx);
          const Index x1 = std::min<Index>(w, w + pad - kx);
          Scalar* d = dst + (y - row_begin) * w;
          const Scalar* s = src + sy * w;
          for (Index xx = x0; xx < x1; ++xx) d[xx] = s[xx + kx - pad];
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const Mat<Scalar>& cols, Extent ext, Index k, Index row_begin, Index row_end,
                Mat<Scalar>& dx) {
  const Index cin = dx.rows();
  const Index pad = k / 2;
  const Index w = ext.width;
  for (Index c = 0; c < cin; ++c) {
    Scalar* dst = dx.row(c).data();
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Scalar* src = cols.row((c * k + ky) * k + kx).data();
        for (Index y = row_begin; y < row_end; ++y) {
          const Index sy = y + ky - pad;
          if (sy < 0 || sy >= ext.height) continue;
          const Index x0 = std::max<Index>(0, pad - kx);
          const Index x1 = std::min<Index>(w, w + pad - kx);
          const Scalar* s = src + (y - row_begin) * w;
          Scalar* d = dst + sy * w;
          for (Index xx = x0; xx < x1; ++xx) d[xx + kx - pad] += s[xx];
        }
      }
    }
  }
}

Index chunk_rows(Extent ext) { return std::max<Index>(1, kChunkPixels / std::max<Index>(1, ext.width)); }

}  // namespace

template <typename Scalar>
Conv2d<Scalar>::Conv2d(Index in_channels, Index out_channels, Index kernel) : kernel_(kernel) {
  if (kernel % 2 == 0) throw ConfigError("conv: kernel size must be odd");
  weight.resize(out_channels, in_channels * kernel * kernel);
  bias.resize(1, out_channels);
  bias.decay = false;
}

template <typename Scalar>
void Conv2d<Scalar>::init(Rng& rng, Scalar std) {
  truncated_normal(weight.value, std, rng);
  bias.value.setZero();
}

template <typename Scalar>
Mat<Scalar> Conv2d<Scalar>::forward(const Mat<Scalar>& x, Extent ext) const {
  if (x.rows() != in_channels() || x.cols() != ext.pixels())
    throw InputError("conv: input shape mismatch");
  Mat<Scalar> y(out_channels(), ext.pixels());
  if (kernel_ == 1) {
    y.noalias() = weight.value * x;
  } else {
    Mat<Scalar> cols;
    const Index step = chunk_rows(ext);
    for (Index r0 = 0; r0 < ext.height; r0 += step) {
      const Index r1 = std::min(ext.height, r0 + step);
      im2col(x, ext, kernel_, r0, r1, cols);
      y.middleCols(r0 * ext.width, cols.cols()).noalias() = weight.value * cols;
    }
  }
  y.colwise() += bias.value.row(0).transpose();
  return y;
}

template <typename Scalar>
Mat<Scalar> Conv2d<Scalar>::backward(const Mat<Scalar>& x, Extent ext, const Mat<Scalar>& dy) {
  if (bias.trainable) bias.grad.row(0) += dy.rowwise().sum().transpose();
  if (kernel_ == 1) {
    if (weight.trainable) weight.grad.noalias() += dy * x.transpose();
    return weight.value.transpose() * dy;
  }
  Mat<Scalar> dx = Mat<Scalar>::Zero(x.rows(), x.cols());
  Mat<Scalar> cols;
  Mat<Scalar> dcols;
  const Index step = chunk_rows(ext);
  for (Index r0 = 0; r0 < ext.height; r0 += step) {
    const Index r1 = std::min(ext.height, r0 + step);
    const auto dy_chunk = dy.middleCols(r0 * ext.width, (r1 - r0) * ext.width);
    if (weight.trainable) {
      im2col(x, ext, kernel_, r0, r1, cols);
      weight.grad.noalias() += dy_chunk * cols.transpose();
    }
    dcols.noalias() = weight.value.transpose() * dy_chunk;
    col2im_add(dcols, ext, kernel_, r0, r1, dx);
  }
  return dx;
}

template <typename Scalar>
Mat<Scalar> linear_interpolation_matrix(Index in, Index out) {
  Mat<Scalar> m = Mat<Scalar>::Zero(out, in);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Index i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    const Index i0 = std::min<Index>(static_cast<Index>(std::floor(src)), in - 1);
    const Index i1 = std::min<Index>(i0 + 1, in - 1);
    const double frac = src - static_cast<double>(i0);
    m(i, i0) += static_cast<Scalar>(1.0 - frac);
    m(i, i1) += static_cast<Scalar>(frac);
  }
  return m;
}

template <typename Scalar>
BilinearResize<Scalar>::BilinearResize(Extent in, Extent out)
    : in_(in), out_(out),
      rows_(linear_interpolation_matrix<Scalar>(in.height, out.height)),
      cols_(linear_interpolation_matrix<Scalar>(in.width, out.width)) {}

template <typename Scalar>
Mat<Scalar> BilinearResize<Scalar>::forward(const Mat<Scalar>& x) const {
  if (x.cols() != in_.pixels()) throw InputError("resize: input extent mismatch");
  if (in_ == out_) return x;
  Mat<Scalar> y(x.rows(), out_.pixels());
  Mat<Scalar> tmp;
  for (Index c = 0; c < x.rows(); ++c) {
    Eigen::Map<const Mat<Scalar>> src(x.row(c).data(), in_.height, in_.width);
    Eigen::Map<Mat<Scalar>> dst(y.row(c).data(), out_.height, out_.width);
    tmp.noalias() = rows_ * src;
    dst.noalias() = tmp * cols_.transpose();
  }
  return y;
}

template <typename Scalar>
Mat<Scalar> BilinearResize<Scalar>::backward(const Mat<Scalar>& dy) const {
  if (in_ == out_) return dy;
  Mat<Scalar> dx(dy.rows(), in_.pixels());
  Mat<Scalar> tmp;
  for (Index c = 0; c < dy.rows(); ++c) {
    Eigen::Map<const Mat<Scalar>> src(dy.row(c).data(), out_.height, out_.width);
    Eigen::Map<Mat<Scalar>> dst(dx.row(c).data(), in_.height, in_.width);
    tmp.noalias() = rows_.transpose() * src;
    dst.noalias() = tmp * cols_;
  }
  return dx;
}

template class Conv2d<float>;
template class Conv2d<double>;
template class BilinearResize<float>;
template class BilinearResize<double>;
template Mat<float> linear_interpolation_matrix<float>(Index, Index);
template Mat<double> linear_interpolation_matrix<double>(Index, Index);

}  // namespace countx::nn
