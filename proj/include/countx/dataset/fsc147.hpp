// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/dataset/annotations.hpp"
#include "countx/image/rgb_image.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace countx::data {

struct SampleRecord {
  std::string filename;
  std::filesystem::path image_path;
  DotAnnotation dots;
  std::string description;
  std::string class_name;
  Size2 size;  // probed from the image header at load time
};

struct DatasetIndex {
  std::map<std::string, std::vector<SampleRecord>> splits;

  /// Throws ConfigError for an unknown split name.
  const std::vector<SampleRecord>& split(const std::string& name) const;
  std::size_t total() const;
};

/// File locations. `from_root` fills in the names used by the public
/// FSC-147 release; every path can be overridden afterwards.
struct Fsc147Layout {
  std::filesystem::path images_dir;
  std::filesystem::path annotations;
  std::filesystem::path splits;
  std::filesystem::path classes;  // optional; without it the description stands in for the class
  std::filesystem::path descriptions;

  static Fsc147Layout from_root(const std::filesystem::path& root,
                                const std::filesystem::path& descriptions = {});
};

/// Filename -> description. Accepts {"img.jpg": "text"} and the released
/// {"img.jpg": {"text_description": "text", ...}} form. Duplicate keys and
/// blank descriptions raise ValidationError.
std::map<std::string, std::string> load_descriptions(const std::filesystem::path& path);

/// Filename -> dots; values are {"points": [[x, y], ...]} or a bare list.
std::map<std::string, DotAnnotation> load_annotations(const std::filesystem::path& path);

/// Missing images, annotations or descriptions and classes shared between
/// splits raise ValidationError listing the offenders.
DatasetIndex load_fsc147(const Fsc147Layout& layout);

struct CountStats {
  std::size_t samples = 0;
  std::size_t min = 0;
  std::size_t max = 0;
  double mean = 0.0;
};

struct SplitReport {
  std::size_t samples = 0;
  std::size_t classes = 0;
  CountStats counts;
};

struct DatasetReport {
  std::map<std::string, SplitReport> splits;
  CountStats counts;
  std::map<std::size_t, std::size_t> description_words;  // word count -> descriptions
  double the_prefix_fraction = 0.0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  nlohmann::json to_json() const;
};

struct ValidationOptions {
  std::size_t min_count = 7;
};

DatasetReport validate_dataset(const DatasetIndex& index, const ValidationOptions& options = {});

struct LoadedSample {
  RgbImage image;
  DotAnnotation dots;
  std::string description;
  std::string id;
};

/// Decodes the image. Dots are clamped to the pixel grid so that boundary
/// annotations (x == width) stay usable.
LoadedSample load_sample(const SampleRecord& record);

}  // namespace countx::data
