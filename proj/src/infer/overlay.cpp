// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/infer/overlay.hpp"

#include "countx/io/image_io.hpp"
#include "countx/nn/conv.hpp"

#include <algorithm>

namespace countx::infer {

std::array<float, 3> heat_color(double t) {
  // Dark blue, blue, cyan, yellow, red.
  static constexpr std::array<std::array<float, 3>, 5> kStops{
      {{0.0f, 0.0f, 0.35f}, {0.0f, 0.3f, 1.0f}, {0.0f, 0.9f, 0.9f}, {1.0f, 0.9f, 0.0f}, {0.9f, 0.05f, 0.0f}}};
  t = std::clamp(t, 0.0, 1.0) * (kStops.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const float f = static_cast<float>(t - i);
  std::array<float, 3> c;
  for (std::size_t k = 0; k < 3; ++k) c[k] = kStops[i][k] + f * (kStops[i + 1][k] - kStops[i][k]);
  return c;
}

RgbImage render_overlay(const RgbImage& image, const Mat<double>& density, const OverlayStyle& style) {
  if (image.empty() || density.size() == 0) throw InputError("overlay: empty input");
  Mat<double> d = density;
  if (d.rows() != image.height || d.cols() != image.width)
    d = nn::linear_interpolation_matrix<double>(d.rows(), image.height) * d *
        nn::linear_interpolation_matrix<double>(d.cols(), image.width).transpose();
  const double peak = d.maxCoeff();
  RgbImage out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double t = peak > 0.0 ? std::max(0.0, d(y, x)) / peak : 0.0;
      const auto c = heat_color(t);
      const float a = static_cast<float>(style.alpha * t);
      for (int k = 0; k < 3; ++k) out.at(k, y, x) = (1.0f - a) * image.at(k, y, x) + a * c[static_cast<std::size_t>(k)];
    }
  return out;
}

void write_overlay_png(const std::filesystem::path& path, const RgbImage& image, const Mat<double>& density,
                       const OverlayStyle& style) {
  io::write_png(path, render_overlay(image, density, style));
}

}  // namespace countx::infer
