// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/nn/layers.hpp"

namespace countx::nn {

/// Spatial extent of a channel-major feature map stored as (C x H*W).
struct Extent {
  Index height = 0;
  Index width = 0;
  Index pixels() const { return height * width; }
  bool operator==(const Extent&) const = default;
};

/// Square-kernel, stride-1, zero-padded ("same") convolution on a
/// channel-major map. Weight rows are flattened (in_channel, ky, kx).
template <typename Scalar>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(Index in_channels, Index out_channels, Index kernel);

  void init(Rng& rng, Scalar std = Scalar(0.02));

  Index in_channels() const { return weight.value.cols() / (kernel_ * kernel_); }
  Index out_channels() const { return weight.value.rows(); }
  Index kernel() const { return kernel_; }

  Mat<Scalar> forward(const Mat<Scalar>& x, Extent extent) const;
  Mat<Scalar> backward(const Mat<Scalar>& x, Extent extent, const Mat<Scalar>& dy);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    f(prefix + "bias", bias);
  }

  Parameter<Scalar> weight;  // out x (in*k*k)
  Parameter<Scalar> bias;    // 1 x out

 private:
  Index kernel_ = 1;
};

/// 1-D linear interpolation weights mapping `in` samples to `out` samples
/// with half-pixel centers (align_corners = false), as an (out x in) matrix.
template <typename Scalar>
Mat<Scalar> linear_interpolation_matrix(Index in, Index out);

/// Separable bilinear resize of every channel of a channel-major map.
template <typename Scalar>
class BilinearResize {
 public:
  BilinearResize() = default;
  BilinearResize(Extent in, Extent out);

  Extent in_extent() const { return in_; }
  Extent out_extent() const { return out_; }

  Mat<Scalar> forward(const Mat<Scalar>& x) const;
  Mat<Scalar> backward(const Mat<Scalar>& dy) const;

 private:
  Extent in_, out_;
  Mat<Scalar> rows_;  // out.height x in.height
  Mat<Scalar> cols_;  // out.width x in.width
};

}  // namespace countx::nn
