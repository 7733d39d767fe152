// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/augment/augment.hpp"

#include "augment_oracle.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace countx;
using namespace countx::augment;
using data::LoadedSample;
using data::Point;
using countx::testing::oracle_tile_dots;

namespace {

LoadedSample make_sample(int w, int h, std::size_t dots, std::string description, Rng& rng) {
  LoadedSample s;
  s.image = RgbImage(w, h);
  std::uniform_real_distribution<float> px(0.0f, 1.0f);
  for (auto& c : s.image.channels)
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = px(rng);
  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
  for (std::size_t i = 0; i < dots; ++i) s.dots.points.push_back({std::floor(ux(rng)), std::floor(uy(rng))});
  s.description = std::move(description);
  s.id = s.description;
  return s;
}

PipelineDraw only(Stage stage) {
  PipelineDraw d;
  d.active[static_cast<std::size_t>(stage)] = true;
  return d;
}

TrainSample as_train(const LoadedSample& s) { return {s.image, s.dots, s.description}; }

}  // namespace

TEST_CASE("augment config defaults, validation and json") {
  const AugmentConfig c;
  CHECK(c.p_augment == doctest::Approx(0.4));
  CHECK(c.p_pipeline_given_augment + c.p_mosaic_given_augment == doctest::Approx(1.0));
  CHECK(c.p_each_stage == doctest::Approx(0.15));
  CHECK(c.mosaic_self_threshold == 70);
  nlohmann::json j = c;
  j["p_augment"] = 0.5;
  const AugmentConfig back = j.get<AugmentConfig>();
  CHECK(back.p_augment == 0.5);
  CHECK(back.shear_deg == c.shear_deg);
  j["p_mosaic_given_augment"] = 0.5;
  CHECK_THROWS_AS(j.get<AugmentConfig>(), ConfigError);
  AugmentConfig odd;
  odd.image_size = 223;
  CHECK_THROWS_AS(odd.validate(), ConfigError);
}

TEST_CASE("square crops") {
  Rng rng(1);
  SUBCASE("square input keeps every dot") {
    const auto s = make_sample(100, 100, 25, "the dots", rng);
    const auto out = random_square_crop(s, 64, rng);
    CHECK(out.image.width == 64);
    CHECK(out.image.height == 64);
    CHECK(out.dots.size() == 25);
    CHECK(out.description == "the dots");
  }
  SUBCASE("dots in the left half vanish when the window is forced right") {
    auto s = make_sample(80, 40, 0, "x", rng);
    for (int i = 0; i < 10; ++i) s.dots.points.push_back({static_cast<double>(i * 3), 20.0});
    CHECK(square_crop(s, 40, 32).dots.size() == 0);
    CHECK(square_crop(s, 0, 32).dots.size() == 10);
  }
  SUBCASE("surviving dots match point-in-window membership") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = make_sample(150, 60, 40, "x", rng);
      const int offset = static_cast<int>(rng() % 91);
      std::size_t inside = 0;
      for (const auto& p : s.dots.points) inside += (p.x >= offset && p.x < offset + 60) ? 1 : 0;
      const auto out = square_crop(s, offset, 224);
      CHECK(out.dots.size() == inside);
      for (const auto& p : out.dots.points) CHECK(data::in_bounds(p, {224, 224}));
    }
  }
  SUBCASE("portrait input crops vertically") {
    const auto s = make_sample(30, 70, 10, "x", rng);
    const auto out = square_crop(s, 40, 30);
    CHECK(out.image.height == 30);
    CHECK_THROWS_AS(square_crop(s, 41, 30), InputError);
  }
}

TEST_CASE("pipeline stages") {
  Rng rng(2);
  const TrainSample base = as_train(make_sample(48, 48, 30, "x", rng));
  SUBCASE("no active stage leaves the sample unchanged") {
    const auto out = apply_pipeline(base, PipelineDraw{});
    CHECK(out.image == base.image);
    CHECK(out.dots == base.dots);
  }
  SUBCASE("flip maps x to W-1-x") {
    PipelineDraw d = only(Stage::kFlip);
    d.flip = true;
    const auto out = apply_pipeline(base, d);
    REQUIRE(out.dots.size() == base.dots.size());
    for (std::size_t i = 0; i < base.dots.size(); ++i) {
      CHECK(out.dots.points[i].x == 47 - base.dots.points[i].x);
      CHECK(out.dots.points[i].y == base.dots.points[i].y);
    }
    d.flip = false;
    CHECK(apply_pipeline(base, d).image == base.image);
  }
  SUBCASE("photometric stages keep dots") {
    for (Stage s : {Stage::kNoise, Stage::kColorJitter, Stage::kBlur}) {
      PipelineDraw d = only(s);
      d.brightness = 1.2;
      d.hue = 0.1;
      d.blur_sigma = 1.5;
      d.noise_seed = 9;
      const auto out = apply_pipeline(base, d);
      CHECK(out.dots == base.dots);
      CHECK_FALSE(out.image == base.image);
    }
  }
  SUBCASE("affine dots match the matrix oracle") {
    for (int trial = 0; trial < 25; ++trial) {
      const AugmentConfig cfg;
      PipelineDraw d = draw_pipeline(cfg, rng);
      d.active = {};
      d.active[static_cast<std::size_t>(Stage::kAffine)] = true;
      // Independent construction of the same forward map.
      const double deg = std::numbers::pi / 180.0;
      const double a = d.rotation * deg, shx = std::tan(d.shear_x * deg), shy = std::tan(d.shear_y * deg);
      Eigen::Matrix3d R, Sh, S, Tc, Tb;
      R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
      Sh << 1, shx, 0, shy, 1, 0, 0, 0, 1;
      S << d.scale, 0, 0, 0, d.scale, 0, 0, 0, 1;
      Tc << 1, 0, -23.5, 0, 1, -23.5, 0, 0, 1;
      Tb << 1, 0, 23.5 + std::round(d.translate_x * 48), 0, 1, 23.5 + std::round(d.translate_y * 48), 0, 0, 1;
      const Eigen::Matrix3d M = Tb * R * Sh * S * Tc;
      std::vector<Point> expected;
      for (const auto& p : base.dots.points) {
        const Eigen::Vector3d q = M * Eigen::Vector3d(p.x, p.y, 1);
        if (q.x() >= 0 && q.y() >= 0 && q.x() < 48 && q.y() < 48) expected.push_back({q.x(), q.y()});
      }
      const auto out = apply_pipeline(base, d);
      REQUIRE(out.dots.size() == expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(out.dots.points[i].x == doctest::Approx(expected[i].x).epsilon(1e-12));
        CHECK(out.dots.points[i].y == doctest::Approx(expected[i].y).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("mosaic of one image sums its quadrant counts") {
  Rng rng(3);
  const AugmentConfig cfg;
  const auto s = make_sample(300, 200, 400, "the beads", rng);
  const std::array<const LoadedSample*, 4> src{&s, &s, &s, &s};
  for (int trial = 0; trial < 10; ++trial) {
    MosaicTrace trace;
    const auto out = mosaic4(src, 0, cfg, rng, &trace);
    CHECK(out.image.width == 224);
    CHECK(out.image.height == 224);
    std::size_t expected = 0;
    for (std::size_t t = 0; t < 4; ++t) {
      CHECK(trace.tiles[t].included);
      const auto n = oracle_tile_dots(s, trace.tiles[t], t, 224, cfg.seam_width);
      CHECK(trace.tiles[t].dots == n);
      expected += n;
    }
    CHECK(out.dots.size() == expected);
    for (const auto& p : out.dots.points) CHECK(data::in_bounds(p, {224, 224}));
  }
}

TEST_CASE("mosaic of distinct classes keeps only the prompt quadrant") {
  Rng rng(4);
  const AugmentConfig cfg;
  const auto a = make_sample(260, 224, 60, "the apples", rng);
  const auto b = make_sample(224, 300, 50, "the birds", rng);
  const auto c = make_sample(400, 240, 70, "the cars", rng);
  const auto d = make_sample(224, 224, 80, "the dogs", rng);
  for (std::size_t prompt = 0; prompt < 4; ++prompt) {
    std::array<const LoadedSample*, 4> src{&b, &c, &d, &a};
    std::swap(src[prompt], src[3]);
    MosaicTrace trace;
    const auto out = mosaic4(src, prompt, cfg, rng, &trace);
    CHECK(out.description == src[prompt]->description);
    CHECK(out.dots.size() == oracle_tile_dots(*src[prompt], trace.tiles[prompt], prompt, 224, cfg.seam_width));
    const double qx = (prompt % 2) * 112.0, qy = (prompt / 2) * 112.0;
    for (const auto& p : out.dots.points) {
      CHECK(p.x >= qx);
      CHECK(p.x < qx + 112);
      CHECK(p.y >= qy);
      CHECK(p.y < qy + 112);
    }
  }
}

TEST_CASE("mosaic seams blend linearly") {
  AugmentConfig cfg;
  cfg.image_size = 64;
  cfg.seam_width = 8;
  LoadedSample white, black;
  white.image = RgbImage::filled(64, 64, 1, 1, 1);
  black.image = RgbImage::filled(64, 64, 0, 0, 0);
  white.description = black.description = "x";
  const std::array<const LoadedSample*, 4> src{&white, &black, &white, &black};
  Rng rng(5);
  const auto out = mosaic4(src, 0, cfg, rng);
  CHECK(out.image.at(0, 10, 27) == doctest::Approx(1.0));
  CHECK(out.image.at(0, 10, 36) == doctest::Approx(0.0));
  CHECK(out.image.at(0, 10, 31) == doctest::Approx(0.5 + 0.5 / 8));
  CHECK(out.image.at(0, 10, 32) == doctest::Approx(0.5 - 0.5 / 8));
}

TEST_CASE("augment_sample branches") {
  Rng rng(6);
  AugmentConfig cfg;
  cfg.p_augment = 1.0;
  cfg.p_pipeline_given_augment = 0.0;
  cfg.p_mosaic_given_augment = 1.0;
  std::vector<LoadedSample> pool;
  const char* names[] = {"the apples", "the birds", "the cars", "the dogs", "the eggs"};
  for (int i = 0; i < 5; ++i) pool.push_back(make_sample(256, 224, 20 + i, names[i], rng));
  const SampleFetcher fetch = [&](std::size_t i) { return pool.at(i); };

  SUBCASE("seventy dots selects the self mosaic") {
    const auto many = make_sample(256, 224, 70, "the seeds", rng);
    AugmentTrace trace;
    augment_sample(many, 0, pool.size(), fetch, cfg, rng, &trace);
    CHECK(trace.branch == Branch::kMosaicSelf);
    const auto few = make_sample(256, 224, 69, "the seeds", rng);
    augment_sample(few, 0, pool.size(), fetch, cfg, rng, &trace);
    CHECK(trace.branch == Branch::kMosaicMixed);
  }
  SUBCASE("mixed mosaics draw three distinct partners") {
    for (int trial = 0; trial < 30; ++trial) {
      AugmentTrace trace;
      const auto out = augment_sample(pool[2], 2, pool.size(), fetch, cfg, rng, &trace);
      REQUIRE(trace.partners.size() == 3);
      std::set<std::size_t> uniq(trace.partners.begin(), trace.partners.end());
      CHECK(uniq.size() == 3);
      CHECK(uniq.count(2) == 0);
      CHECK(out.description == "the cars");
    }
  }
  SUBCASE("fixed seed gives a bit-identical sample") {
    const AugmentConfig defaults;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng r1 = derive_rng(seed, {1, 2}), r2 = derive_rng(seed, {1, 2});
      const auto a = augment_sample(pool[0], 0, pool.size(), fetch, defaults, r1);
      const auto b = augment_sample(pool[0], 0, pool.size(), fetch, defaults, r2);
      CHECK(a.image == b.image);
      CHECK(a.dots == b.dots);
    }
  }
  SUBCASE("every output is valid") {
    const AugmentConfig defaults;
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t i = static_cast<std::size_t>(trial) % pool.size();
      const auto out = augment_sample(pool[i], i, pool.size(), fetch, defaults, rng);
      CHECK(out.image.width == 224);
      CHECK_FALSE(out.description.empty());
      for (const auto& p : out.dots.points) CHECK(data::in_bounds(p, {224, 224}));
    }
  }
}
