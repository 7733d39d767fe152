// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/image/rgb_image.hpp"

#include "countx/nn/conv.hpp"

namespace countx {

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  if (w < 0 || h < 0) throw InputError("image dimensions must be non-negative");
  for (auto& c : channels) c.setZero(h, w);
}

RgbImage RgbImage::filled(int w, int h, float r, float g, float b) {
  RgbImage im(w, h);
  im.channels[0].setConstant(r);
  im.channels[1].setConstant(g);
  im.channels[2].setConstant(b);
  return im;
}

bool RgbImage::operator==(const RgbImage& other) const {
  if (width != other.width || height != other.height) return false;
  for (std::size_t c = 0; c < 3; ++c)
    if (channels[c] != other.channels[c]) return false;
  return true;
}

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (width <= 0 || height <= 0) throw InputError("resize: target size must be positive");
  if (image.empty()) throw InputError("resize: empty image");
  if (width == image.width && height == image.height) return image;
  const Plane rows = nn::linear_interpolation_matrix<float>(image.height, height);
  const Plane cols = nn::linear_interpolation_matrix<float>(image.width, width);
  RgbImage out;
  out.width = width;
  out.height = height;
  for (std::size_t c = 0; c < 3; ++c) out.channels[c] = rows * image.channels[c] * cols.transpose();
  return out;
}

RgbImage crop(const RgbImage& image, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || width <= 0 || height <= 0 || x + width > image.width ||
      y + height > image.height)
    throw InputError("crop: window outside image");
  RgbImage out;
  out.width = width;
  out.height = height;
  for (std::size_t c = 0; c < 3; ++c) out.channels[c] = image.channels[c].block(y, x, height, width);
  return out;
}

RgbImage hconcat(const RgbImage& a, const RgbImage& b) {
  if (a.height != b.height) throw InputError("hconcat: heights differ");
  RgbImage out(a.width + b.width, a.height);
  for (std::size_t c = 0; c < 3; ++c) {
    out.channels[c].leftCols(a.width) = a.channels[c];
    out.channels[c].rightCols(b.width) = b.channels[c];
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> to_model_input(const RgbImage& image, const ModelConfig& config) {
  if (image.width != config.image_size || image.height != config.image_size)
    throw InputError("model input must be " + std::to_string(config.image_size) + "x" +
                     std::to_string(config.image_size) + ", got " + std::to_string(image.width) +
                     "x" + std::to_string(image.height));
  const Eigen::Index n = static_cast<Eigen::Index>(image.width) * image.height;
  Mat<Scalar> out(3, n);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto flat = Eigen::Map<const RowVec<float>>(image.channels[c].data(), n);
    const Scalar mean = static_cast<Scalar>(config.image_mean[c]);
    const Scalar inv_std = Scalar(1) / static_cast<Scalar>(config.image_std[c]);
    out.row(static_cast<Eigen::Index>(c)) =
        ((flat.template cast<Scalar>().array() - mean) * inv_std).matrix();
  }
  return out;
}

template Mat<float> to_model_input<float>(const RgbImage&, const ModelConfig&);
template Mat<double> to_model_input<double>(const RgbImage&, const ModelConfig&);

}  // namespace countx
