// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/infer/overlay.hpp"
#include "countx/infer/sliding_window.hpp"
#include "countx/io/image_io.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace countx;
using namespace countx::infer;
using countx::testing::TempDir;

namespace {

// Accumulate-and-divide over explicit window rectangles.
Mat<double> brute_stitch(const std::vector<Mat<double>>& w, const WindowPlan& plan) {
  Mat<double> out(plan.height, plan.width);
  for (int y = 0; y < plan.height; ++y)
    for (int x = 0; x < plan.width; ++x) {
      double s = 0.0;
      int c = 0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        const int wx = plan.window_x(k), wy = plan.window_y(k);
        if (x >= wx && x < wx + plan.side_x && y >= wy && y < wy + plan.side_y) {
          s += w[k](y - wy, x - wx);
          ++c;
        }
      }
      out(y, x) = s / c;
    }
  return out;
}

std::vector<Mat<double>> random_windows(const WindowPlan& plan, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<Mat<double>> w(plan.size(), Mat<double>(plan.side_y, plan.side_x));
  for (auto& m : w)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return w;
}

RgbImage gradient_image(int w, int h) {
  RgbImage im(w, h);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) im.at(c, y, x) = static_cast<float>((x + 2 * y + 5 * c) % 17) / 16.0f;
  return im;
}

std::shared_ptr<const ModelPredictor<double>> toy_predictor(std::uint64_t seed = 11) {
  auto model = std::make_shared<const CountingModel<double>>(ModelConfig::toy(), seed);
  return std::make_shared<ModelPredictor<double>>(model, make_tokenizer(model->config()));
}

}  // namespace

TEST_CASE("window plans") {
  CHECK(plan_windows(384, 384).x_offsets == std::vector<int>{0});
  CHECK(plan_windows(640, 384).x_offsets == std::vector<int>{0, 128, 256});
  CHECK(plan_windows(600, 384).x_offsets == std::vector<int>{0, 128, 216});
  CHECK(plan_windows(384, 384).size() == 1);
  CHECK_THROWS_AS(plan_windows(300, 384), InputError);
  CHECK_THROWS_AS(plan_windows(600, 384, 0), InputError);

  Rng rng(1);
  std::uniform_int_distribution<int> side_d(1, 400), extra(0, 1500), stride_d(1, 300);
  for (int trial = 0; trial < 300; ++trial) {
    const int side = side_d(rng), width = side + extra(rng);
    const int stride = std::min(side, stride_d(rng));
    const auto offsets = plan_offsets(width, side, stride);
    CHECK(offsets.front() == 0);
    CHECK(offsets.back() + side == width);
    CHECK(std::is_sorted(offsets.begin(), offsets.end()));
    std::vector<int> cover(static_cast<std::size_t>(width), 0);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      if (i > 0) CHECK(offsets[i] - offsets[i - 1] <= stride);
      if (i > 0) CHECK(offsets[i] > offsets[i - 1]);
      for (int x = offsets[i]; x < offsets[i] + side; ++x) ++cover[static_cast<std::size_t>(x)];
    }
    CHECK(*std::min_element(cover.begin(), cover.end()) >= 1);
    CHECK(*std::max_element(cover.begin(), cover.end()) <= (side + stride - 1) / stride + 1);
  }
  // Regular windows reach 3 layers; the flush window at 416 adds a fourth.
  const auto wide = plan_windows(800, 384);
  CHECK(wide.x_offsets == std::vector<int>{0, 128, 256, 384, 416});
  CHECK_THROWS_AS(plan_windows(600, 100, 128), InputError);
  CHECK_NOTHROW(plan_offsets(100, 100, 128));
}

TEST_CASE("stitching") {
  SUBCASE("non-overlapping windows concatenate") {
    const auto plan = plan_windows(12, 4, 4);
    Rng rng(2);
    const auto w = random_windows(plan, rng);
    const auto s = stitch_average(w, plan);
    for (std::size_t k = 0; k < 3; ++k) CHECK(s.block(0, 4 * k, 4, 4) == w[k]);
  }
  SUBCASE("half-overlapping constants average") {
    const auto plan = plan_windows(6, 4, 2);
    const std::vector<Mat<double>> w{Mat<double>::Constant(4, 4, 1.0), Mat<double>::Constant(4, 4, 3.0)};
    const auto s = stitch_average(w, plan);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(2, 2) == 2.0);
    CHECK(s(3, 3) == 2.0);
    CHECK(s(1, 5) == 3.0);
  }
  SUBCASE("random plans match the brute-force oracle") {
    Rng rng(3);
    std::uniform_int_distribution<int> side_d(3, 20), extra(0, 40), stride_d(1, 12);
    for (int trial = 0; trial < 50; ++trial) {
      const int sx = side_d(rng), sy = side_d(rng);
      const auto plan = plan_grid(sx + extra(rng), sy + extra(rng) / 3, sx, sy, std::min(sy, std::min(sx, stride_d(rng))));
      const auto w = random_windows(plan, rng);
      CHECK((stitch_average(w, plan) - brute_stitch(w, plan)).cwiseAbs().maxCoeff() < 1e-12);
    }
    for (int trial = 0; trial < 10; ++trial) {
      auto plan = plan_windows(40 + extra(rng), 16, std::min(16, stride_d(rng)));
      auto w = random_windows(plan, rng);
      const double sum = stitch_average(w, plan).sum();
      std::reverse(plan.x_offsets.begin(), plan.x_offsets.end());
      std::reverse(w.begin(), w.end());
      CHECK(stitch_average(w, plan).sum() == doctest::Approx(sum).epsilon(1e-12));
    }
  }
  SUBCASE("errors") {
    const auto plan = plan_windows(6, 4, 2);
    CHECK_THROWS_AS(stitch_average(std::vector<Mat<double>>(1, Mat<double>::Zero(4, 4)), plan), InputError);
    CHECK_THROWS_AS(stitch_average(std::vector<Mat<double>>(2, Mat<double>::Zero(3, 4)), plan), InputError);
  }
}

TEST_CASE("sum-preserving resample") {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat<double> d(24, 24);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = u(rng);
  const auto r = resample_preserving_sum(d, 384, 200);
  CHECK(r.rows() == 384);
  CHECK(r.cols() == 200);
  CHECK(r.sum() == doctest::Approx(d.sum()).epsilon(1e-12));
  CHECK(resample_preserving_sum(Mat<double>::Zero(4, 4), 9, 9).isZero());
}

TEST_CASE("uniform stub counts follow the coverage-averaged closed form") {
  const double u = 0.25;
  SUBCASE("full-resolution stub") {
    const ConstantPredictor stub(u);
    const auto r = predict(stub, gradient_image(96, 64), "the sea shells");
    CHECK(r.density.cols() == 576);
    CHECK(r.plan.x_offsets == std::vector<int>{0, 128, 192});
    CHECK(r.count == doctest::Approx(u * 576 * 384 / 60.0).epsilon(1e-12));
    for (double wc : r.window_counts) CHECK(wc == doctest::Approx(u * 384 * 384 / 60.0).epsilon(1e-12));
  }
  SUBCASE("low-resolution stub") {
    const ConstantPredictor stub(u, 64, 24, 60.0);
    const auto r = predict(stub, gradient_image(96, 64), "the sea shells");
    CHECK(r.count == doctest::Approx(u * 24 * 24 / (384.0 * 384) * 576 * 384 / 60.0).epsilon(1e-12));
  }
  SUBCASE("narrow image is a single full-frame window") {
    const ConstantPredictor stub(u);
    const auto r = predict(stub, gradient_image(32, 64), "x");
    CHECK(r.plan.size() == 1);
    CHECK(r.plan.side_x == 192);
    CHECK(r.count == doctest::Approx(r.window_counts[0]).epsilon(1e-12));
  }
  SUBCASE("composite of one image twice doubles the count") {
    const ConstantPredictor stub(u);
    const std::vector<std::string> prompts{"x"};
    const auto single = predict(stub, gradient_image(100, 70), "x");
    const auto c = composite_predict(stub, gradient_image(100, 70), gradient_image(100, 70), prompts);
    REQUIRE(c.results.size() == 1);
    CHECK(c.boundary == single.density.cols());
    CHECK(std::abs(c.results[0].count / (2 * single.count) - 1.0) < 0.02);
    CHECK(composite_predict(stub, gradient_image(10, 10), gradient_image(10, 10), {}).results.empty());
  }
  CHECK_THROWS_AS(predict(ConstantPredictor(u), gradient_image(64, 64), "   "), InputError);
}

TEST_CASE("model predictor: deterministic, thread-invariant, one text encoding per prediction") {
  const auto pred = toy_predictor();
  const RgbImage im = gradient_image(150, 80);
  const std::size_t before = pred->prompt_encodings();
  const auto a = predict(*pred, im, "the red apples");
  CHECK(pred->prompt_encodings() == before + 1);
  CHECK(a.plan.size() > 1);
  InferenceConfig threaded;
  threaded.threads = 4;
  const auto b = predict(*pred, im, "the red apples", threaded);
  CHECK(a.density == b.density);
  CHECK(a.count == b.count);
  CHECK(a.count == doctest::Approx(a.density.sum() / 60.0).epsilon(1e-12));
  CHECK(a.count >= 0.0);
  const auto c = predict(*pred, im, "small blue boats");
  CHECK(c.density != a.density);
}

TEST_CASE("predictor loading") {
  CHECK(load_predictor("stub:zero")->model_id() == "stub:zero");
  const auto u = load_predictor("stub:uniform:0.5");
  CHECK(dynamic_cast<const ConstantPredictor&>(*u).value() == 0.5);
  CHECK(u->describe()["kind"] == "stub");
  CHECK_THROWS_AS(load_predictor("stub:uniform:"), ConfigError);
  CHECK_THROWS_AS(load_predictor("stub:uniform:-1"), ConfigError);
  CHECK_THROWS_AS(load_predictor("stub:nothing"), ConfigError);
  CHECK_THROWS_AS(load_predictor("/nonexistent/ck.safetensors"), LoadError);

  TempDir dir("predictor");
  const CountingModel<float> model(ModelConfig::toy(), 21);
  CheckpointMetadata meta;
  meta.epoch = 17;
  meta.val_mae = 4.5;
  save_checkpoint(model, dir / "toy.safetensors", meta);
  const auto loaded = load_predictor((dir / "toy.safetensors").string());
  CHECK(loaded->output_size() == 24);
  CHECK(loaded->describe()["epoch"] == 17);
  CHECK(loaded->describe()["val_mae"] == 4.5);
  const auto direct = ModelPredictor<float>(std::make_shared<const CountingModel<float>>(model),
                                            make_tokenizer(model.config()));
  const auto im = gradient_image(64, 64);
  CHECK(predict(*loaded, im, "the cups").density == predict(direct, im, "the cups").density);
}

TEST_CASE("overlay rendering") {
  CHECK(heat_color(0.0) == std::array<float, 3>{0.0f, 0.0f, 0.35f});
  CHECK(heat_color(1.0)[0] == doctest::Approx(0.9f));
  const RgbImage im = gradient_image(40, 30);
  CHECK(render_overlay(im, Mat<double>::Zero(30, 40)) == im);
  Mat<double> d = Mat<double>::Zero(12, 16);
  d(6, 8) = 3.0;
  const auto o = render_overlay(im, d);
  CHECK(o.width == 40);
  CHECK(o.height == 30);
  CHECK_FALSE(o == im);
  TempDir dir("overlay");
  write_overlay_png(dir / "o.png", im, d);
  CHECK(io::probe_image(dir / "o.png").width == 40);
}
