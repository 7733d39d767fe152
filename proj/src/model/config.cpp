// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/model/config.hpp"

#include "countx/core/common.hpp"

namespace countx {

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.image_size = 64;
  c.patch_size = 16;
  c.embed_dim = 64;
  c.image_width = 64;
  c.image_layers = 2;
  c.image_heads = 4;
  c.text_width = 64;
  c.text_layers = 2;
  c.text_heads = 4;
  c.context_length = 16;
  c.vocab_size = 260;
  c.interaction_layers = 1;
  c.interaction_heads = 4;
  c.decoder_base_channels = 16;
  c.decoder_upsample_blocks = 2;
  c.interaction_grid = 6;
  c.toy_mode = true;
  c.image_mean = {0.0, 0.0, 0.0};
  c.image_std = {1.0, 1.0, 1.0};
  return c;
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("model config: " + what);
  };
  require(image_size > 0 && patch_size > 0, "image_size and patch_size must be positive");
  require(image_size % patch_size == 0, "image_size must be divisible by patch_size");
  require(embed_dim > 0 && image_width > 0 && text_width > 0, "widths must be positive");
  require(image_heads > 0 && image_width % image_heads == 0,
          "image_width must be divisible by image_heads");
  require(text_heads > 0 && text_width % text_heads == 0,
          "text_width must be divisible by text_heads");
  require(interaction_heads > 0 && embed_dim % interaction_heads == 0,
          "embed_dim must be divisible by interaction_heads");
  require(image_layers >= 0 && text_layers >= 0 && interaction_layers >= 0,
          "layer counts must be non-negative");
  require(context_length >= 2, "context_length must hold start and end markers");
  require(vocab_size >= 3, "vocab_size too small");
  require(mlp_ratio > 0, "mlp_ratio must be positive");
  require(decoder_base_channels > 0, "decoder_base_channels must be positive");
  require(decoder_upsample_blocks >= 1, "decoder needs at least one upsample block");
  require(interaction_grid > 0, "interaction_grid must be positive");
  require(density_scale > 0.0, "density_scale must be positive");
  for (double s : image_std) require(s > 0.0, "image_std entries must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"image_size", c.image_size},
                     {"patch_size", c.patch_size},
                     {"embed_dim", c.embed_dim},
                     {"image_width", c.image_width},
                     {"image_layers", c.image_layers},
                     {"image_heads", c.image_heads},
                     {"text_width", c.text_width},
                     {"text_layers", c.text_layers},
                     {"text_heads", c.text_heads},
                     {"context_length", c.context_length},
                     {"vocab_size", c.vocab_size},
                     {"interaction_layers", c.interaction_layers},
                     {"interaction_heads", c.interaction_heads},
                     {"mlp_ratio", c.mlp_ratio},
                     {"decoder_base_channels", c.decoder_base_channels},
                     {"decoder_upsample_blocks", c.decoder_upsample_blocks},
                     {"interaction_grid", c.interaction_grid},
                     {"density_scale", c.density_scale},
                     {"toy_mode", c.toy_mode},
                     {"image_mean", c.image_mean},
                     {"image_std", c.image_std}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  // Start from the matching preset so partial files only override.
  ModelConfig base = j.value("toy_mode", false) ? ModelConfig::toy() : ModelConfig{};
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("image_size", base.image_size);
  get("patch_size", base.patch_size);
  get("embed_dim", base.embed_dim);
  get("image_width", base.image_width);
  get("image_layers", base.image_layers);
  get("image_heads", base.image_heads);
  get("text_width", base.text_width);
  get("text_layers", base.text_layers);
  get("text_heads", base.text_heads);
  get("context_length", base.context_length);
  get("vocab_size", base.vocab_size);
  get("interaction_layers", base.interaction_layers);
  get("interaction_heads", base.interaction_heads);
  get("mlp_ratio", base.mlp_ratio);
  get("decoder_base_channels", base.decoder_base_channels);
  get("decoder_upsample_blocks", base.decoder_upsample_blocks);
  get("interaction_grid", base.interaction_grid);
  get("density_scale", base.density_scale);
  get("toy_mode", base.toy_mode);
  get("image_mean", base.image_mean);
  get("image_std", base.image_std);
  c = base;
}

}  // namespace countx
