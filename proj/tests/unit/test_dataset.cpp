// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/dataset/annotations.hpp"
#include "countx/dataset/fsc147.hpp"
#include "countx/io/image_io.hpp"

#include "fixture.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

using namespace countx;
using namespace countx::data;
using countx::testing::TempDir;
using countx::testing::clean_specs;
using countx::testing::write_fixture;
using nlohmann::json;

namespace {

// Independent oracle: per pixel, sum over dots of the normalized kernel value.
Mat<double> oracle_density(const std::vector<Point>& px, Size2 out, double sigma, int r) {
  Mat<double> m = Mat<double>::Zero(out.height, out.width);
  for (const auto& p : px) {
    const int cx = static_cast<int>(p.x), cy = static_cast<int>(p.y);
    double z = 0.0;
    for (int y = cy - r; y <= cy + r; ++y)
      for (int x = cx - r; x <= cx + r; ++x)
        if (x >= 0 && y >= 0 && x < out.width && y < out.height)
          z += std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma));
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        if (std::abs(x - cx) <= r && std::abs(y - cy) <= r)
          m(y, x) += std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma)) / z;
  }
  return m;
}

}  // namespace

TEST_CASE("scale_dots") {
  const DotAnnotation dots{{{100, 200}, {0, 0}, {447, 447}}};
  CHECK(scale_dots(dots, {448, 448}, {448, 448}) == dots);
  const auto half = scale_dots(dots, {448, 448}, {224, 224});
  CHECK(half.points[0] == Point{50, 100});
  CHECK(half.points[2] == Point{223, 223});  // 223.5 rounds up, clamped in bounds
  Rng rng(1);
  std::uniform_real_distribution<double> ux(0, 383), uy(0, 255);
  DotAnnotation random;
  for (int i = 0; i < 200; ++i) random.points.push_back({std::round(ux(rng)), std::round(uy(rng))});
  const auto back = scale_dots(scale_dots(random, {384, 256}, {997, 611}), {997, 611}, {384, 256});
  for (std::size_t i = 0; i < random.size(); ++i) {
    CHECK(std::abs(back.points[i].x - random.points[i].x) <= 1.0);
    CHECK(std::abs(back.points[i].y - random.points[i].y) <= 1.0);
  }
}

TEST_CASE("density targets conserve mass and match the brute-force oracle") {
  CHECK(build_density_target({}, {64, 64}, {32, 32}).data.sum() == 0.0);

  const auto one = build_density_target({{{32, 32}}}, {64, 64}, {64, 64});
  CHECK(one.data.sum() == doctest::Approx(1.0).epsilon(1e-9));
  Eigen::Index r, c;
  one.data.maxCoeff(&r, &c);
  CHECK(r == 32);
  CHECK(c == 32);

  const DotAnnotation seven{{{0, 0}, {63, 63}, {1, 62}, {30, 30}, {30, 31}, {5, 40}, {63, 0}}};
  const auto t = build_density_target(seven, {64, 64}, {40, 40});
  CHECK(std::abs(t.data.sum() - 7.0) <= 1e-4);
  const auto snapped = scale_dots(seven, {64, 64}, {40, 40});
  const Mat<double> oracle = oracle_density(snapped.points, {40, 40}, 1.0, 4);
  CHECK((t.data - oracle).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(t.data.minCoeff() >= 0.0);
}

TEST_CASE("density targets are permutation invariant") {
  DotAnnotation dots{{{3, 4}, {10, 10}, {2, 30}, {31, 0}}};
  const auto a = build_density_target(dots, {32, 32}, {32, 32});
  std::reverse(dots.points.begin(), dots.points.end());
  const auto b = build_density_target(dots, {32, 32}, {32, 32});
  CHECK((a.data - b.data).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("out-of-bounds dots are rejected") {
  CHECK_THROWS_AS(build_density_target({{{64, 3}}}, {64, 64}, {32, 32}), ValidationError);
  CHECK_THROWS_AS(build_density_target({{{-0.1, 3}}}, {64, 64}, {32, 32}), ValidationError);
}

TEST_CASE("fixture loads with class-disjoint splits") {
  TempDir dir("fsc");
  write_fixture(dir.path(), clean_specs());
  const auto index = load_fsc147(Fsc147Layout::from_root(dir.path()));
  CHECK(index.total() == 6);
  CHECK(index.split("train").size() == 3);
  const auto& first = index.split("train").front();
  CHECK(first.filename == "1.jpg");
  CHECK(first.dots.size() == 7);
  CHECK(first.description == "the apples");
  CHECK(first.class_name == "apples");
  CHECK(first.size == Size2{48, 32});
  CHECK_THROWS_AS(index.split("holdout"), ConfigError);

  const auto report = validate_dataset(index);
  CHECK(report.ok());
  CHECK(report.counts.min == 7);
  CHECK(report.counts.max == 15);
  CHECK(report.counts.mean == doctest::Approx(61.0 / 6));
  CHECK(report.splits.at("test").classes == 2);
  CHECK(report.the_prefix_fraction == doctest::Approx(5.0 / 6));
  CHECK(report.description_words.at(2) == 5);
  CHECK(report.to_json()["violations"].empty());

  const auto sample = load_sample(first);
  CHECK(sample.image.width == 48);
  CHECK(sample.dots == first.dots);
}

TEST_CASE("a class shared across splits is a validation error") {
  TempDir dir("fsc-overlap");
  auto specs = clean_specs();
  specs[3].cls = "apples";
  write_fixture(dir.path(), specs);
  try {
    load_fsc147(Fsc147Layout::from_root(dir.path()));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(e.offenders().size() == 1);
    CHECK(e.offenders()[0].find("apples") != std::string::npos);
  }
}

TEST_CASE("missing images and descriptions are listed") {
  TempDir dir("fsc-missing");
  write_fixture(dir.path(), clean_specs());
  std::filesystem::remove(dir / "images_384_VarV2/3.jpg");
  json desc = json::parse(std::ifstream(dir / "FSC-147-D.json"));
  desc.erase("5.jpg");
  std::ofstream(dir / "FSC-147-D.json") << desc.dump();
  try {
    load_fsc147(Fsc147Layout::from_root(dir.path()));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.offenders().size() == 2);
  }
}

TEST_CASE("validation reports small counts and out-of-bounds dots") {
  TempDir dir("fsc-report");
  auto specs = clean_specs();
  specs[1].dots = 6;
  write_fixture(dir.path(), specs);
  auto index = load_fsc147(Fsc147Layout::from_root(dir.path()));
  index.splits["val"][0].dots.points.push_back({48.5, 1});
  const auto report = validate_dataset(index);
  REQUIRE(report.violations.size() == 2);
  CHECK(report.violations[0].find("2.jpg") != std::string::npos);
  CHECK(report.violations[1].find("4.jpg") != std::string::npos);
}

TEST_CASE("description files") {
  TempDir dir("desc");
  std::ofstream(dir / "plain.json") << R"({"a.jpg": "the hot air balloons", "b.jpg": "cars"})";
  const auto plain = load_descriptions(dir / "plain.json");
  CHECK(plain.at("a.jpg") == "the hot air balloons");
  std::ofstream(dir / "empty.json") << R"({"a.jpg": "  "})";
  CHECK_THROWS_AS(load_descriptions(dir / "empty.json"), ValidationError);
  std::ofstream(dir / "dup.json") << R"({"a.jpg": "x", "a.jpg": "y"})";
  CHECK_THROWS_AS(load_descriptions(dir / "dup.json"), ValidationError);
  std::ofstream(dir / "broken.json") << R"({"a.jpg": )";
  CHECK_THROWS_AS(load_descriptions(dir / "broken.json"), LoadError);
}
