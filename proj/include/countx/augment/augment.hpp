// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/dataset/fsc147.hpp"
#include "countx/image/ops.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <span>

namespace countx::augment {

struct TrainSample {
  RgbImage image;  // image_size x image_size
  data::DotAnnotation dots;
  std::string description;
};

struct AugmentConfig {
  int image_size = 224;

  double p_augment = 2.0 / 5.0;
  double p_pipeline_given_augment = 3.0 / 8.0;
  double p_mosaic_given_augment = 5.0 / 8.0;
  double p_each_stage = 3.0 / 20.0;
  std::size_t mosaic_self_threshold = 70;

  double noise_std = 0.1;
  double brightness = 0.25;
  double contrast = 0.15;
  double saturation = 0.15;
  double hue = 0.15;
  int blur_kernel_x = 7;
  int blur_kernel_y = 9;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  double rotation_deg = 15.0;
  double scale_min = 0.8;
  double scale_max = 1.2;
  double translate = 0.2;
  double shear_deg = 10.0;
  double flip_p = 0.5;

  int seam_width = 32;

  /// Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

enum class Stage { kNoise = 0, kColorJitter, kBlur, kAffine, kFlip };
inline constexpr std::size_t kStageCount = 5;

/// Every random quantity of one pipeline application, drawn up front.
struct PipelineDraw {
  std::array<bool, kStageCount> active{};
  std::uint64_t noise_seed = 0;
  double noise_std = 0.1;
  int blur_kernel_x = 7, blur_kernel_y = 9;
  double brightness = 1.0, contrast = 1.0, saturation = 1.0, hue = 0.0;
  double blur_sigma = 1.0;
  double rotation = 0.0, scale = 1.0, translate_x = 0.0, translate_y = 0.0;
  double shear_x = 0.0, shear_y = 0.0;
  bool flip = false;

  bool stage(Stage s) const { return active[static_cast<std::size_t>(s)]; }
};

PipelineDraw draw_pipeline(const AugmentConfig& config, Rng& rng);

/// Forward map of the affine stage on pixel-index coordinates: rotation,
/// shear and scale about the image centre, then translation, i.e.
/// T(c + t) R Sh S T(-c) with c = ((W-1)/2, (H-1)/2).
Affine2 affine_matrix(const PipelineDraw& draw, int width, int height);

/// Noise, colour jitter, blur, affine, flip, in that order, each only when
/// active in the draw. Geometric stages move dots; dots leaving the image
/// are dropped. Flip maps x to W-1-x.
TrainSample apply_pipeline(const TrainSample& sample, const PipelineDraw& draw);

/// Square window of side min(W, H) at `offset` along the longer axis,
/// resized to `image_size`. Dots outside the window are dropped.
TrainSample square_crop(const data::LoadedSample& sample, int offset, int image_size);
/// As above with a uniformly random offset.
TrainSample random_square_crop(const data::LoadedSample& sample, int image_size, Rng& rng);

struct MosaicTile {
  std::size_t source = 0;  // index into the mosaic sources
  double scale_x = 1.0;    // source -> tile resampling factors
  double scale_y = 1.0;
  int offset_x = 0;        // window origin in the rescaled source
  int offset_y = 0;
  bool included = false;   // description matches the prompt
  std::size_t dots = 0;    // dots contributed from the tile core
};

struct MosaicTrace {
  std::array<MosaicTile, 4> tiles;  // row-major quadrants
};

/// 2x2 mosaic. Tile q (row-major) shows a random window of sources[q] scaled
/// so its shorter side equals image_size. Each tile extends seam_width/2
/// past the centre lines and adjacent tiles are linearly alpha-blended over
/// the seam band. Dots are kept from each tile's own quadrant, only for
/// tiles whose description equals sources[prompt_index]'s.
TrainSample mosaic4(std::span<const data::LoadedSample* const> sources, std::size_t prompt_index,
                    const AugmentConfig& config, Rng& rng, MosaicTrace* trace = nullptr);

enum class Branch { kCropOnly, kPipeline, kMosaicSelf, kMosaicMixed };

struct AugmentTrace {
  Branch branch = Branch::kCropOnly;
  PipelineDraw pipeline;                 // valid for kPipeline
  MosaicTrace mosaic;                    // valid for mosaic branches
  std::vector<std::size_t> partners;     // dataset indices, kMosaicMixed
  std::size_t prompt_quadrant = 0;
};

using SampleFetcher = std::function<data::LoadedSample(std::size_t)>;

/// One training draw for dataset sample `index` (already loaded as
/// `sample`). `fetch` loads mosaic partners from the same split of
/// `dataset_size` samples.
TrainSample augment_sample(const data::LoadedSample& sample, std::size_t index, std::size_t dataset_size,
                           const SampleFetcher& fetch, const AugmentConfig& config, Rng& rng,
                           AugmentTrace* trace = nullptr);

}  // namespace countx::augment
