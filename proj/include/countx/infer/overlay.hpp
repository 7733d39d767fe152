// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/image/rgb_image.hpp"

#include <filesystem>

namespace countx::infer {

struct OverlayStyle {
  double alpha = 0.55;  // opacity of the heatmap at peak density
};

/// Density normalized by its maximum, colour-mapped and alpha-composited over
/// `image`. The density is resampled to the image size when they differ.
RgbImage render_overlay(const RgbImage& image, const Mat<double>& density, const OverlayStyle& style = {});

/// RGB of the heatmap colour for t in [0, 1].
std::array<float, 3> heat_color(double t);

void write_overlay_png(const std::filesystem::path& path, const RgbImage& image, const Mat<double>& density,
                       const OverlayStyle& style = {});

}  // namespace countx::infer
