// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <string>

namespace countx {

/// Architecture hyperparameters. The image tower runs at `image_width` and
/// the text tower at `text_width`; both are projected into the shared
/// `embed_dim` space used by the interaction module and decoder.
struct ModelConfig {
  int image_size = 224;
  int patch_size = 16;
  int embed_dim = 512;

  int image_width = 768;
  int image_layers = 12;
  int image_heads = 12;

  int text_width = 512;
  int text_layers = 12;
  int text_heads = 8;
  int context_length = 77;
  int vocab_size = 49408;

  int interaction_layers = 2;
  int interaction_heads = 8;
  int mlp_ratio = 4;

  int decoder_base_channels = 256;
  int decoder_upsample_blocks = 4;
  int interaction_grid = 24;

  double density_scale = 60.0;
  bool toy_mode = false;

  // Per-channel normalization applied to [0,1] RGB before the image encoder.
  std::array<double, 3> image_mean{0.48145466, 0.4578275, 0.40821073};
  std::array<double, 3> image_std{0.26862954, 0.26130258, 0.27577711};

  /// Reduced configuration for CPU tests: 64x64 input -> 4x4 patch grid ->
  /// 6x6 interaction grid -> 24x24 density.
  static ModelConfig toy();

  int patch_grid() const { return image_size / patch_size; }
  int output_size() const { return interaction_grid << decoder_upsample_blocks; }

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace countx
