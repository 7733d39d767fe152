// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/image/rgb_image.hpp"

#include <Eigen/Dense>

namespace countx {

/// 2-D affine map acting on pixel-centre coordinates: p' = linear * p + offset.
struct Affine2 {
  Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return linear * p + offset; }
  Affine2 inverse() const;
  Affine2 operator*(const Affine2& rhs) const;

  static Affine2 translation(double tx, double ty);
  static Affine2 rotation_deg(double degrees);
  static Affine2 shear_deg(double sx, double sy);
  static Affine2 scaling(double s);
};

RgbImage flip_horizontal(const RgbImage& image);

/// Output pixel p samples the input at inverse(forward)(p) bilinearly;
/// samples outside the input read as zero.
RgbImage warp_affine(const RgbImage& image, const Affine2& forward);

/// Separable Gaussian blur with reflect padding. Kernel sizes must be odd.
RgbImage gaussian_blur(const RgbImage& image, int kernel_x, int kernel_y, double sigma);
RgbImage add_gaussian_noise(const RgbImage& image, double stddev, Rng& rng);

/// Photometric adjustments; all outputs are clamped to [0, 1].
RgbImage adjust_brightness(const RgbImage& image, double factor);
RgbImage adjust_contrast(const RgbImage& image, double factor);
RgbImage adjust_saturation(const RgbImage& image, double factor);
/// Hue rotation by `shift` turns, shift in [-0.5, 0.5].
RgbImage adjust_hue(const RgbImage& image, double shift);

Plane grayscale(const RgbImage& image);

/// Per-pixel a * alpha + b * (1 - alpha); alpha is height x width in [0, 1].
RgbImage blend(const RgbImage& a, const RgbImage& b, const Plane& alpha);

void clamp_unit(RgbImage& image);

}  // namespace countx
