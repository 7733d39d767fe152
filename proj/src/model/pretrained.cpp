// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/model/pretrained.hpp"

#include "countx/io/safetensors.hpp"

#include <array>
#include <numeric>
#include <set>

namespace countx {

namespace {

constexpr std::array<NameRule, 14> kRules{{
    {"visual.conv1.weight", "image_encoder.patch_embed.weight"},
    {"visual.class_embedding", "image_encoder.class_embedding"},
    {"visual.positional_embedding", "image_encoder.pos_embed"},
    {"visual.ln_pre.", "image_encoder.ln_pre."},
    {"visual.transformer.resblocks.", "image_encoder.blocks."},
    {"visual.ln_post.", "image_encoder.ln_post."},
    {"visual.proj", "image_encoder.proj"},
    {"token_embedding.weight", "text_encoder.token_embedding"},
    {"positional_embedding", "text_encoder.pos_embed"},
    {"transformer.resblocks.", "text_encoder.blocks."},
    {"ln_final.", "text_encoder.ln_final."},
    {"text_projection", "text_encoder.proj"},
    // Some exports nest the towers under a "clip_model." prefix; strip it.
    {"clip_model.", ""},
    {"module.", ""},
}};

}  // namespace

std::span<const NameRule> clip_name_rules() { return kRules; }

std::optional<std::string> map_clip_name(std::string_view name) {
  for (const auto& rule : kRules) {
    if (!name.starts_with(rule.source)) continue;
    // Whole-name rules (no trailing dot) must match exactly.
    if (!rule.source.ends_with('.') && name.size() != rule.source.size()) continue;
    const std::string rest(name.substr(rule.source.size()));
    if (rule.target.empty()) return map_clip_name(rest);
    return std::string(rule.target) + rest;
  }
  return std::nullopt;
}

template <typename Scalar>
PretrainedReport load_pretrained_encoders(CountingModel<Scalar>& model,
                                          const std::filesystem::path& weights) {
  const io::TensorArchive archive = io::read_safetensors(weights);
  std::map<std::string, const io::TensorRecord*> mapped;
  PretrainedReport report;
  for (const auto& [name, rec] : archive.tensors) {
    if (auto target = map_clip_name(name))
      mapped.emplace(*target, &rec);
    else
      report.ignored.push_back(name);
  }

  std::vector<std::string> missing;
  for (Component c : {Component::kImageEncoder, Component::kTextEncoder}) {
    model.visit_component(c, [&](const std::string& name, nn::Parameter<Scalar>& p) {
      const auto it = mapped.find(name);
      if (it == mapped.end()) {
        missing.push_back(name);
        return;
      }
      const auto& shape = it->second->shape;
      const std::int64_t rows = shape.size() <= 1 ? 1 : shape[0];
      const std::int64_t cols =
          shape.empty() ? 1
          : shape.size() == 1
              ? shape[0]
              : std::accumulate(shape.begin() + 1, shape.end(), std::int64_t{1}, std::multiplies<>());
      if (rows != p.value.rows() || cols != p.value.cols())
        throw ConfigError("pretrained weight " + name + " has shape " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " but the config expects " +
                          std::to_string(p.value.rows()) + "x" + std::to_string(p.value.cols()));
      p.value = io::to_matrix<Scalar>(*it->second, rows, cols);
      ++report.loaded;
    });
  }
  if (!missing.empty())
    throw ConfigError("pretrained weights lack " + std::to_string(missing.size()) +
                      " encoder tensors, first: " + missing.front());
  return report;
}

template PretrainedReport load_pretrained_encoders<float>(CountingModel<float>&,
                                                          const std::filesystem::path&);
template PretrainedReport load_pretrained_encoders<double>(CountingModel<double>&,
                                                           const std::filesystem::path&);

}  // namespace countx
