// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/infer/predictor.hpp"

#include <span>

namespace countx::infer {

/// Window placement over a resized image. Windows are enumerated row-major
/// over (y_offsets x x_offsets); each covers side_y x side_x pixels.
struct WindowPlan {
  int width = 0;
  int height = 0;
  int side_x = 0;
  int side_y = 0;
  int stride = 128;
  std::vector<int> x_offsets;
  std::vector<int> y_offsets{0};

  std::size_t size() const { return x_offsets.size() * y_offsets.size(); }
  int window_x(std::size_t k) const { return x_offsets[k % x_offsets.size()]; }
  int window_y(std::size_t k) const { return y_offsets[k / x_offsets.size()]; }
};

/// Offsets 0, stride, 2 stride, ... with a final window flush to the far
/// edge. Every pixel is covered; the flush window can raise the coverage to
/// ceil(side / stride) + 1. Throws InputError when side > length, stride <= 0
/// or stride > side.
std::vector<int> plan_offsets(int length, int side, int stride);

/// Single row of side x side windows over a `width` wide strip.
WindowPlan plan_windows(int width, int side, int stride = 128);
/// Two-axis plan for images taller than the window.
WindowPlan plan_grid(int width, int height, int side_x, int side_y, int stride = 128);

/// Per-pixel mean over the windows covering it. `windows[k]` is the density
/// of window k at its footprint size (side_y x side_x).
Mat<double> stitch_average(std::span<const Mat<double>> windows, const WindowPlan& plan);

/// Bilinear resample to rows x cols, rescaled so the sum is unchanged.
Mat<double> resample_preserving_sum(const Mat<double>& density, int rows, int cols);

struct InferenceConfig {
  int working_height = 384;
  int window_side = 384;
  int stride = 128;
  /// Concurrent windows; 0 uses the hardware concurrency.
  int threads = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const InferenceConfig& c);
void from_json(const nlohmann::json& j, InferenceConfig& c);

struct CountResult {
  double count = 0.0;
  Mat<double> density;  // stitched, at the resized image resolution
  std::vector<double> window_counts;
  std::string prompt;
  WindowPlan plan;
};

/// Resizes to the working height (aspect preserved), scans windows, and
/// averages their densities. Windows narrower than the image are clamped to
/// it, so a narrow image is a single full-frame window.
CountResult predict(const DensityPredictor& predictor, const RgbImage& image, std::string_view description,
                    const InferenceConfig& config = {});
CountResult predict(const DensityPredictor& predictor, const RgbImage& image, const EncodedPrompt& prompt,
                    const InferenceConfig& config = {});

/// Working-height resize used by predict().
RgbImage resize_to_height(const RgbImage& image, int height);

struct CompositeResult {
  RgbImage image;    // both inputs side by side at the working height
  int boundary = 0;  // first column of the right image
  std::vector<CountResult> results;  // one per description
};

CompositeResult composite_predict(const DensityPredictor& predictor, const RgbImage& a, const RgbImage& b,
                                  std::span<const std::string> descriptions, const InferenceConfig& config = {});

}  // namespace countx::infer
