// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/infer/sliding_window.hpp"

#include "countx/core/parallel.hpp"
#include "countx/nn/conv.hpp"

#include <algorithm>
#include <cmath>

namespace countx::infer {

std::vector<int> plan_offsets(int length, int side, int stride) {
  if (stride <= 0) throw InputError("stride must be positive");
  if (side <= 0 || side > length)
    throw InputError("window side " + std::to_string(side) + " exceeds extent " + std::to_string(length));
  if (stride > side && length > side) throw InputError("stride exceeds the window side and would skip pixels");
  std::vector<int> offsets;
  for (int x = 0; x + side <= length; x += stride) offsets.push_back(x);
  if (offsets.back() + side < length) offsets.push_back(length - side);
  return offsets;
}

WindowPlan plan_windows(int width, int side, int stride) { return plan_grid(width, side, side, side, stride); }

WindowPlan plan_grid(int width, int height, int side_x, int side_y, int stride) {
  WindowPlan plan;
  plan.width = width;
  plan.height = height;
  plan.side_x = side_x;
  plan.side_y = side_y;
  plan.stride = stride;
  plan.x_offsets = plan_offsets(width, side_x, stride);
  plan.y_offsets = plan_offsets(height, side_y, stride);
  return plan;
}

Mat<double> stitch_average(std::span<const Mat<double>> windows, const WindowPlan& plan) {
  if (windows.size() != plan.size())
    throw InputError("stitch: " + std::to_string(windows.size()) + " densities for " +
                     std::to_string(plan.size()) + " windows");
  Mat<double> sum = Mat<double>::Zero(plan.height, plan.width);
  Mat<double> cover = Mat<double>::Zero(plan.height, plan.width);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    if (windows[k].rows() != plan.side_y || windows[k].cols() != plan.side_x)
      throw InputError("stitch: window density does not match its footprint");
    const int x = plan.window_x(k), y = plan.window_y(k);
    sum.block(y, x, plan.side_y, plan.side_x) += windows[k];
    cover.block(y, x, plan.side_y, plan.side_x).array() += 1.0;
  }
  return sum.cwiseQuotient(cover);
}

Mat<double> resample_preserving_sum(const Mat<double>& density, int rows, int cols) {
  if (density.rows() == rows && density.cols() == cols) return density;
  const Mat<double> ry = nn::linear_interpolation_matrix<double>(density.rows(), rows);
  const Mat<double> rx = nn::linear_interpolation_matrix<double>(density.cols(), cols);
  Mat<double> out = ry * density * rx.transpose();
  const double before = density.sum(), after = out.sum();
  if (after > 0.0) out *= before / after;
  return out;
}

void InferenceConfig::validate() const {
  if (working_height <= 0 || window_side <= 0 || stride <= 0)
    throw ConfigError("inference geometry must be positive");
  if (stride > window_side) throw ConfigError("stride must not exceed window_side");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

void to_json(nlohmann::json& j, const InferenceConfig& c) {
  j = {{"working_height", c.working_height}, {"window_side", c.window_side}, {"stride", c.stride},
       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, InferenceConfig& c) {
  c = {};
  c.working_height = j.value("working_height", c.working_height);
  c.window_side = j.value("window_side", c.window_side);
  c.stride = j.value("stride", c.stride);
  c.threads = j.value("threads", c.threads);
  c.validate();
}

RgbImage resize_to_height(const RgbImage& image, int height) {
  if (image.empty()) throw InputError("empty image");
  const double aspect = static_cast<double>(image.width) / image.height;
  const int width = std::max(1, static_cast<int>(std::lround(aspect * height)));
  return resize_bilinear(image, width, height);
}

CountResult predict(const DensityPredictor& predictor, const RgbImage& image, std::string_view description,
                    const InferenceConfig& config) {
  return predict(predictor, image, predictor.encode_prompt(description), config);
}

CountResult predict(const DensityPredictor& predictor, const RgbImage& image, const EncodedPrompt& prompt,
                    const InferenceConfig& config) {
  config.validate();
  const RgbImage resized = resize_to_height(image, config.working_height);
  CountResult result;
  result.prompt = prompt.text;
  result.plan = plan_grid(resized.width, resized.height, std::min(config.window_side, resized.width),
                          std::min(config.window_side, resized.height), config.stride);
  const WindowPlan& plan = result.plan;
  const int in = predictor.input_size();
  std::vector<Mat<double>> windows(plan.size());
  parallel_for(plan.size(), config.threads, [&](std::size_t k) {
    const RgbImage view = crop(resized, plan.window_x(k), plan.window_y(k), plan.side_x, plan.side_y);
    const Mat<double> density = predictor.predict_window(resize_bilinear(view, in, in), prompt);
    windows[k] = resample_preserving_sum(density, plan.side_y, plan.side_x);
  });
  result.window_counts.reserve(windows.size());
  for (const auto& w : windows) result.window_counts.push_back(w.sum() / predictor.density_scale());
  result.density = stitch_average(windows, plan);
  result.count = result.density.sum() / predictor.density_scale();
  return result;
}

CompositeResult composite_predict(const DensityPredictor& predictor, const RgbImage& a, const RgbImage& b,
                                  std::span<const std::string> descriptions, const InferenceConfig& config) {
  CompositeResult out;
  const RgbImage left = resize_to_height(a, config.working_height);
  out.image = hconcat(left, resize_to_height(b, config.working_height));
  out.boundary = left.width;
  for (const auto& d : descriptions) out.results.push_back(predict(predictor, out.image, d, config));
  return out;
}

}  // namespace countx::infer
