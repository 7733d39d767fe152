// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/core/common.hpp"
#include "countx/model/config.hpp"

#include <array>

namespace countx {

using Plane = Mat<float>;

/// Planar RGB image with values in [0, 1]; each plane is height x width.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::array<Plane, 3> channels;

  RgbImage() = default;
  RgbImage(int w, int h);

  static RgbImage filled(int w, int h, float r, float g, float b);

  bool empty() const { return width == 0 || height == 0; }
  float& at(int c, int y, int x) { return channels[static_cast<std::size_t>(c)](y, x); }
  float at(int c, int y, int x) const { return channels[static_cast<std::size_t>(c)](y, x); }

  bool operator==(const RgbImage& other) const;
};

/// Half-pixel-center bilinear resize.
RgbImage resize_bilinear(const RgbImage& image, int width, int height);
RgbImage crop(const RgbImage& image, int x, int y, int width, int height);
/// Places `b` to the right of `a`; heights must agree.
RgbImage hconcat(const RgbImage& a, const RgbImage& b);

/// Channel-normalized model input, (3 x H*W) with per-channel mean/std from
/// the config. The image must already be image_size x image_size.
template <typename Scalar>
Mat<Scalar> to_model_input(const RgbImage& image, const ModelConfig& config);

}  // namespace countx
