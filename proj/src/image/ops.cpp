// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/image/ops.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace countx {

Affine2 Affine2::inverse() const {
  Affine2 inv;
  inv.linear = linear.inverse();
  inv.offset = -inv.linear * offset;
  return inv;
}

Affine2 Affine2::operator*(const Affine2& rhs) const {
  Affine2 out;
  out.linear = linear * rhs.linear;
  out.offset = linear * rhs.offset + offset;
  return out;
}

Affine2 Affine2::translation(double tx, double ty) {
  Affine2 a;
  a.offset = {tx, ty};
  return a;
}

Affine2 Affine2::rotation_deg(double degrees) {
  const double r = degrees * std::numbers::pi / 180.0;
  Affine2 a;
  a.linear << std::cos(r), -std::sin(r), std::sin(r), std::cos(r);
  return a;
}

Affine2 Affine2::shear_deg(double sx, double sy) {
  Affine2 a;
  a.linear << 1.0, std::tan(sx * std::numbers::pi / 180.0), std::tan(sy * std::numbers::pi / 180.0), 1.0;
  return a;
}

Affine2 Affine2::scaling(double s) {
  Affine2 a;
  a.linear = Eigen::Matrix2d::Identity() * s;
  return a;
}

void clamp_unit(RgbImage& image) {
  for (auto& c : image.channels) c = c.cwiseMax(0.0f).cwiseMin(1.0f);
}

RgbImage flip_horizontal(const RgbImage& image) {
  RgbImage out = image;
  for (auto& c : out.channels) c = c.rowwise().reverse().eval();
  return out;
}

RgbImage warp_affine(const RgbImage& image, const Affine2& forward) {
  const Affine2 inv = forward.inverse();
  RgbImage out(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const Eigen::Vector2d s = inv.apply({x, y});
      const double fx = std::floor(s.x()), fy = std::floor(s.y());
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double tx = s.x() - fx, ty = s.y() - fy;
      if (x0 < -1 || y0 < -1 || x0 >= image.width || y0 >= image.height) continue;
      const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k)
          if (xs[k] >= 0 && ys[k] >= 0 && xs[k] < image.width && ys[k] < image.height)
            acc += w[k] * image.at(c, ys[k], xs[k]);
        out.at(c, y, x) = static_cast<float>(acc);
      }
    }
  return out;
}

namespace {

std::vector<float> gaussian_kernel(int size, double sigma) {
  std::vector<float> k(static_cast<std::size_t>(size));
  const int r = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - r;
    const double v = std::exp(-0.5 * d * d / (sigma * sigma));
    k[static_cast<std::size_t>(i)] = static_cast<float>(v);
    total += v;
  }
  for (auto& v : k) v = static_cast<float>(v / total);
  return k;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

}  // namespace

RgbImage gaussian_blur(const RgbImage& image, int kernel_x, int kernel_y, double sigma) {
  if (kernel_x % 2 == 0 || kernel_y % 2 == 0 || kernel_x < 1 || kernel_y < 1)
    throw InputError("gaussian_blur: kernel sizes must be odd and positive");
  if (!(sigma > 0)) throw InputError("gaussian_blur: sigma must be positive");
  const auto kx = gaussian_kernel(kernel_x, sigma);
  const auto ky = gaussian_kernel(kernel_y, sigma);
  const int rx = kernel_x / 2, ry = kernel_y / 2;
  RgbImage out(image.width, image.height);
  Plane tmp(image.height, image.width);
  for (std::size_t c = 0; c < 3; ++c) {
    const Plane& src = image.channels[c];
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) {
        float acc = 0.0f;
        for (int i = -rx; i <= rx; ++i) acc += kx[static_cast<std::size_t>(i + rx)] * src(y, reflect(x + i, image.width));
        tmp(y, x) = acc;
      }
    Plane& dst = out.channels[c];
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) {
        float acc = 0.0f;
        for (int i = -ry; i <= ry; ++i) acc += ky[static_cast<std::size_t>(i + ry)] * tmp(reflect(y + i, image.height), x);
        dst(y, x) = acc;
      }
  }
  return out;
}

RgbImage add_gaussian_noise(const RgbImage& image, double stddev, Rng& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  RgbImage out = image;
  for (auto& c : out.channels)
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] += static_cast<float>(n(rng));
  clamp_unit(out);
  return out;
}

Plane grayscale(const RgbImage& image) {
  return 0.299f * image.channels[0] + 0.587f * image.channels[1] + 0.114f * image.channels[2];
}

RgbImage adjust_brightness(const RgbImage& image, double factor) {
  RgbImage out = image;
  for (auto& c : out.channels) c *= static_cast<float>(factor);
  clamp_unit(out);
  return out;
}

RgbImage adjust_contrast(const RgbImage& image, double factor) {
  const float mean = grayscale(image).mean();
  const float f = static_cast<float>(factor);
  RgbImage out = image;
  for (auto& c : out.channels) c = (f * c.array() + (1.0f - f) * mean).matrix();
  clamp_unit(out);
  return out;
}

RgbImage adjust_saturation(const RgbImage& image, double factor) {
  const Plane gray = grayscale(image);
  const float f = static_cast<float>(factor);
  RgbImage out = image;
  for (auto& c : out.channels) c = f * c + (1.0f - f) * gray;
  clamp_unit(out);
  return out;
}

RgbImage adjust_hue(const RgbImage& image, double shift) {
  RgbImage out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double r = image.at(0, y, x), g = image.at(1, y, x), b = image.at(2, y, x);
      const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
      const double d = mx - mn;
      if (d <= 0.0) continue;
      double h;
      if (mx == r)
        h = std::fmod((g - b) / d, 6.0);
      else if (mx == g)
        h = (b - r) / d + 2.0;
      else
        h = (r - g) / d + 4.0;
      h = h / 6.0 + shift;
      h -= std::floor(h);
      const double s = d / mx, v = mx;
      const double h6 = h * 6.0;
      const int sector = static_cast<int>(std::floor(h6)) % 6;
      const double f = h6 - std::floor(h6);
      const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
      double rgb[3];
      switch (sector) {
        case 0: rgb[0] = v, rgb[1] = t, rgb[2] = p; break;
        case 1: rgb[0] = q, rgb[1] = v, rgb[2] = p; break;
        case 2: rgb[0] = p, rgb[1] = v, rgb[2] = t; break;
        case 3: rgb[0] = p, rgb[1] = q, rgb[2] = v; break;
        case 4: rgb[0] = t, rgb[1] = p, rgb[2] = v; break;
        default: rgb[0] = v, rgb[1] = p, rgb[2] = q; break;
      }
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<float>(rgb[c]);
    }
  clamp_unit(out);
  return out;
}

RgbImage blend(const RgbImage& a, const RgbImage& b, const Plane& alpha) {
  if (a.width != b.width || a.height != b.height || alpha.rows() != a.height || alpha.cols() != a.width)
    throw InputError("blend: size mismatch");
  RgbImage out(a.width, a.height);
  for (std::size_t c = 0; c < 3; ++c)
    out.channels[c] = (a.channels[c].array() * alpha.array() +
                       b.channels[c].array() * (1.0f - alpha.array()))
                          .matrix();
  return out;
}

}  // namespace countx
