// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/model/counting_model.hpp"

#include <filesystem>
#include <optional>
#include <string_view>

namespace countx {

/// Prefix rewrite from the public CLIP (open_clip state-dict) parameter names
/// to internal names. Suffixes inside transformer blocks (ln_1, attn.in_proj_*,
/// attn.out_proj.*, ln_2, mlp.c_fc.*, mlp.c_proj.*) are shared verbatim.
struct NameRule {
  std::string_view source;
  std::string_view target;
};

/// The full mapping table, most specific prefix first.
std::span<const NameRule> clip_name_rules();

/// Internal name for a source tensor, or nullopt for tensors without a
/// counterpart (e.g. logit_scale, attention masks).
std::optional<std::string> map_clip_name(std::string_view source_name);

struct PretrainedReport {
  std::size_t loaded = 0;
  std::vector<std::string> ignored;  // source tensors without a mapping
};

/// Copies image/text encoder weights from a safetensors CLIP export into
/// `model`. Every encoder parameter must be present with a matching shape;
/// otherwise ConfigError. 1-D tensors map to (1 x n), N-D to
/// (shape[0] x prod(rest)).
template <typename Scalar>
PretrainedReport load_pretrained_encoders(CountingModel<Scalar>& model,
                                          const std::filesystem::path& weights);

/// Randomly initialized model, with encoders replaced by pretrained weights
/// when a weight file is given.
template <typename Scalar>
CountingModel<Scalar> init_model(const ModelConfig& config,
                                 const std::optional<std::filesystem::path>& pretrained = {},
                                 std::uint64_t seed = 1234) {
  CountingModel<Scalar> model(config, seed);
  if (pretrained) load_pretrained_encoders(model, *pretrained);
  return model;
}

}  // namespace countx
