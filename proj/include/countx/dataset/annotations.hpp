// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/core/common.hpp"

#include <string>
#include <vector>

namespace countx::data {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Object centres in pixel coordinates of the image they annotate.
struct DotAnnotation {
  std::vector<Point> points;
  std::size_t size() const { return points.size(); }
  bool operator==(const DotAnnotation&) const = default;
};

struct Size2 {
  int width = 0;
  int height = 0;
  bool operator==(const Size2&) const = default;
};

/// True when 0 <= x < width and 0 <= y < height.
bool in_bounds(const Point& p, Size2 size);

/// Rescales by to/from per axis, rounds to the nearest pixel and clamps into
/// bounds. Count is preserved.
DotAnnotation scale_dots(const DotAnnotation& dots, Size2 from, Size2 to);

struct DensityTarget {
  Mat<double> data;  // out_h x out_w, unscaled (sums to the count)
  std::size_t count = 0;
};

struct KernelSpec {
  double sigma = 1.0;
  int radius = 4;
};

/// Each dot (scaled to `out` and snapped to a pixel) contributes a truncated
/// Gaussian renormalized to unit mass over its in-bounds support. Throws
/// ValidationError if a dot lies outside `src`.
DensityTarget build_density_target(const DotAnnotation& dots, Size2 src, Size2 out,
                                   KernelSpec kernel = {});

}  // namespace countx::data
