// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/image/ops.hpp"
#include "countx/image/rgb_image.hpp"
#include "countx/io/base64.hpp"
#include "countx/io/image_io.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace countx;
using countx::testing::TempDir;

namespace {

RgbImage random_image(int w, int h, Rng& rng) {
  std::uniform_int_distribution<int> u(0, 255);
  RgbImage im(w, h);
  for (auto& c : im.channels)
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = static_cast<float>(u(rng)) / 255.0f;
  return im;
}

}  // namespace

TEST_CASE("png round trip is lossless on 8-bit values") {
  Rng rng(1);
  const RgbImage im = random_image(13, 7, rng);
  const auto bytes = io::encode_png(im);
  CHECK(io::sniff_format(bytes) == io::ImageFormat::kPng);
  const RgbImage back = io::decode_image(bytes);
  CHECK(back == im);
}

TEST_CASE("jpeg round trip is close and probing reads the header") {
  TempDir dir("jpeg");
  const RgbImage im = RgbImage::filled(40, 24, 0.2f, 0.6f, 0.8f);
  io::write_jpeg(dir / "a.jpg", im, 95);
  const auto info = io::probe_image(dir / "a.jpg");
  CHECK(info.width == 40);
  CHECK(info.height == 24);
  CHECK(info.format == io::ImageFormat::kJpeg);
  const RgbImage back = io::read_image(dir / "a.jpg");
  for (std::size_t c = 0; c < 3; ++c) CHECK((back.channels[c] - im.channels[c]).cwiseAbs().maxCoeff() < 0.02f);

  io::write_png(dir / "b.png", im);
  const auto png = io::probe_image(dir / "b.png");
  CHECK(png.width == 40);
  CHECK(png.height == 24);
}

TEST_CASE("undecodable data is an input error") {
  const std::vector<std::uint8_t> junk{'G', 'I', 'F', '8', '9', 'a'};
  CHECK(io::sniff_format(junk) == io::ImageFormat::kUnknown);
  CHECK_THROWS_AS(io::decode_image(junk), InputError);
  std::vector<std::uint8_t> truncated = io::encode_png(RgbImage::filled(8, 8, 1, 0, 0));
  truncated.resize(truncated.size() / 2);
  CHECK_THROWS_AS(io::decode_image(truncated), InputError);
  const std::vector<std::uint8_t> bad_jpeg{0xFF, 0xD8, 0xFF, 0x00, 0x01};
  CHECK_THROWS_AS(io::decode_image(bad_jpeg), InputError);
  CHECK_THROWS_AS(io::read_image("/nonexistent/image.png"), LoadError);
}

TEST_CASE("base64 round trip and data URLs") {
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 100u}) {
    std::vector<std::uint8_t> bytes(n);
    for (std::size_t i = 0; i < n; ++i) bytes[i] = static_cast<std::uint8_t>(i * 37 + 11);
    CHECK(io::base64_decode(io::base64_encode(bytes)) == bytes);
  }
  const std::string hello = "aGVsbG8=";
  CHECK(io::base64_encode(std::vector<std::uint8_t>{'h', 'e', 'l', 'l', 'o'}) == hello);
  CHECK(io::base64_decode("data:image/png;base64," + hello) == std::vector<std::uint8_t>{'h', 'e', 'l', 'l', 'o'});
  CHECK_THROWS_AS(io::base64_decode("a$b="), InputError);
  CHECK_THROWS_AS(io::base64_decode("abcde"), InputError);
}

TEST_CASE("resize, crop and concatenation") {
  Rng rng(2);
  const RgbImage im = random_image(10, 6, rng);
  CHECK(resize_bilinear(im, 10, 6) == im);
  const RgbImage flat = RgbImage::filled(9, 5, 0.25f, 0.5f, 0.75f);
  const RgbImage big = resize_bilinear(flat, 31, 17);
  CHECK(big.width == 31);
  CHECK(big.height == 17);
  CHECK((big.channels[1].array() - 0.5f).abs().maxCoeff() < 1e-6f);
  const RgbImage c = crop(im, 2, 1, 4, 3);
  CHECK(c.at(0, 0, 0) == im.at(0, 1, 2));
  CHECK(c.at(2, 2, 3) == im.at(2, 3, 5));
  CHECK_THROWS_AS(crop(im, 7, 0, 4, 3), InputError);
  const RgbImage cat = hconcat(im, c.height == im.height ? c : crop(im, 0, 0, 3, 6));
  CHECK(cat.width == 13);
}

TEST_CASE("model input normalization") {
  ModelConfig cfg = ModelConfig::toy();
  const RgbImage im = RgbImage::filled(cfg.image_size, cfg.image_size, 0.5f, 0.25f, 1.0f);
  cfg.image_mean = {0.5, 0.5, 0.5};
  cfg.image_std = {0.25, 0.5, 1.0};
  const Mat<double> x = to_model_input<double>(im, cfg);
  CHECK(x.rows() == 3);
  CHECK(x(0, 0) == doctest::Approx(0.0));
  CHECK(x(1, 5) == doctest::Approx(-0.5));
  CHECK(x(2, 9) == doctest::Approx(0.5));
  CHECK_THROWS_AS(to_model_input<double>(RgbImage(8, 8), cfg), InputError);
}

TEST_CASE("horizontal flip maps x to W-1-x") {
  Rng rng(3);
  const RgbImage im = random_image(7, 4, rng);
  const RgbImage f = flip_horizontal(im);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 7; ++x) CHECK(f.at(1, y, x) == im.at(1, y, 6 - x));
}

TEST_CASE("affine warp by an integer translation shifts pixels") {
  Rng rng(4);
  const RgbImage im = random_image(9, 8, rng);
  const RgbImage t = warp_affine(im, Affine2::translation(2, 1));
  for (int y = 1; y < 8; ++y)
    for (int x = 2; x < 9; ++x) CHECK(t.at(0, y, x) == doctest::Approx(im.at(0, y - 1, x - 2)));
  CHECK(t.at(0, 0, 0) == 0.0f);
  const Affine2 a = Affine2::rotation_deg(12) * Affine2::shear_deg(5, -3) * Affine2::scaling(1.1);
  const Eigen::Vector2d p{3.5, -2.0};
  CHECK((a.inverse().apply(a.apply(p)) - p).norm() < 1e-12);
}

TEST_CASE("gaussian blur preserves constants and mean") {
  const RgbImage flat = RgbImage::filled(12, 10, 0.3f, 0.3f, 0.3f);
  const RgbImage b = gaussian_blur(flat, 7, 9, 1.5);
  CHECK((b.channels[0].array() - 0.3f).abs().maxCoeff() < 1e-6f);
  CHECK_THROWS_AS(gaussian_blur(flat, 6, 9, 1.0), InputError);
}

TEST_CASE("photometric adjustments") {
  const RgbImage im = RgbImage::filled(4, 4, 0.2f, 0.4f, 0.6f);
  CHECK(adjust_brightness(im, 1.0) == im);
  CHECK(adjust_brightness(im, 2.0).at(2, 0, 0) == doctest::Approx(1.0));
  CHECK(adjust_contrast(im, 1.0) == im);
  CHECK(adjust_saturation(im, 1.0) == im);
  const RgbImage gray = adjust_saturation(im, 0.0);
  CHECK(gray.at(0, 1, 1) == doctest::Approx(gray.at(2, 1, 1)));
  const RgbImage h0 = adjust_hue(im, 0.0);
  for (std::size_t c = 0; c < 3; ++c) CHECK((h0.channels[c] - im.channels[c]).cwiseAbs().maxCoeff() < 1e-6f);
  // A third of a turn maps pure red to pure green.
  const RgbImage red = RgbImage::filled(2, 2, 1.0f, 0.0f, 0.0f);
  const RgbImage green = adjust_hue(red, 1.0 / 3.0);
  CHECK(green.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(green.at(1, 0, 0) == doctest::Approx(1.0));
  Rng rng(5);
  const RgbImage noisy = add_gaussian_noise(im, 0.5, rng);
  CHECK(noisy.channels[0].minCoeff() >= 0.0f);
  CHECK(noisy.channels[0].maxCoeff() <= 1.0f);
}
