// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/dataset/annotations.hpp"

#include <algorithm>
#include <cmath>

namespace countx::data {

bool in_bounds(const Point& p, Size2 size) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x < size.width && p.y < size.height;
}

DotAnnotation scale_dots(const DotAnnotation& dots, Size2 from, Size2 to) {
  if (from.width <= 0 || from.height <= 0 || to.width <= 0 || to.height <= 0)
    throw InputError("scale_dots: sizes must be positive");
  const double sx = static_cast<double>(to.width) / from.width;
  const double sy = static_cast<double>(to.height) / from.height;
  DotAnnotation out;
  out.points.reserve(dots.size());
  for (const auto& p : dots.points)
    out.points.push_back({std::clamp(std::round(p.x * sx), 0.0, to.width - 1.0),
                          std::clamp(std::round(p.y * sy), 0.0, to.height - 1.0)});
  return out;
}

DensityTarget build_density_target(const DotAnnotation& dots, Size2 src, Size2 out, KernelSpec kernel) {
  if (out.width <= 0 || out.height <= 0) throw InputError("density target: output size must be positive");
  std::vector<std::string> offenders;
  for (std::size_t i = 0; i < dots.size(); ++i)
    if (!in_bounds(dots.points[i], src))
      offenders.push_back("dot " + std::to_string(i) + " at (" + std::to_string(dots.points[i].x) + ", " +
                          std::to_string(dots.points[i].y) + ")");
  if (!offenders.empty())
    throw ValidationError("density target: dots outside the " + std::to_string(src.width) + "x" +
                              std::to_string(src.height) + " source image",
                          std::move(offenders));

  const int r = kernel.radius;
  const int side = 2 * r + 1;
  Mat<double> k(side, side);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      k(dy + r, dx + r) = std::exp(-0.5 * (dx * dx + dy * dy) / (kernel.sigma * kernel.sigma));

  DensityTarget target;
  target.data.setZero(out.height, out.width);
  target.count = dots.size();
  for (const auto& p : scale_dots(dots, src, out).points) {
    const int cx = static_cast<int>(p.x), cy = static_cast<int>(p.y);
    const int x0 = std::max(0, cx - r), x1 = std::min(out.width - 1, cx + r);
    const int y0 = std::max(0, cy - r), y1 = std::min(out.height - 1, cy + r);
    const auto support = k.block(y0 - cy + r, x0 - cx + r, y1 - y0 + 1, x1 - x0 + 1);
    target.data.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1) += support / support.sum();
  }
  return target;
}

}  // namespace countx::data
