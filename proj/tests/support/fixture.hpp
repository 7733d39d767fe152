// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/io/image_io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace countx::testing {

/// One image of a miniature FSC-147 tree: a flat grey 48x32 PNG and `dots`
/// annotated points.
struct FixtureSpec {
  std::string name;
  std::string split;
  std::string cls;
  std::string description;
  int dots;
};

inline void write_fixture(const std::filesystem::path& root, const std::vector<FixtureSpec>& specs) {
  std::filesystem::create_directories(root / "images_384_VarV2");
  using nlohmann::json;
  json ann, desc;
  json splits = {{"train", json::array()}, {"val", json::array()}, {"test", json::array()}};
  std::ofstream classes(root / "ImageClasses_FSC147.txt");
  for (const auto& s : specs) {
    io::write_png(root / "images_384_VarV2" / s.name, RgbImage::filled(48, 32, 0.5f, 0.5f, 0.5f));
    json pts = json::array();
    for (int i = 0; i < s.dots; ++i) pts.push_back({2.0 + 3 * i % 44, 3.0 + i % 28});
    ann[s.name] = {{"points", pts}, {"H", 32}, {"W", 48}};
    splits[s.split].push_back(s.name);
    desc[s.name] = {{"data_split", s.split}, {"text_description", s.description}};
    classes << s.name << '\t' << s.cls << '\n';
  }
  std::ofstream(root / "annotation_FSC147_384.json") << ann.dump();
  std::ofstream(root / "Train_Test_Val_FSC_147.json") << splits.dump();
  std::ofstream(root / "FSC-147-D.json") << desc.dump();
}

inline std::vector<FixtureSpec> clean_specs() {
  return {{"1.jpg", "train", "apples", "the apples", 7},  {"2.jpg", "train", "apples", "the red apples", 9},
          {"3.jpg", "train", "cars", "the cars", 12},     {"4.jpg", "val", "birds", "the birds", 8},
          {"5.jpg", "test", "pens", "the pens", 10},      {"6.jpg", "test", "boats", "sailing boats", 15}};
}

}  // namespace countx::testing
