// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/model/modules.hpp"

#include <array>
#include <span>
#include <string_view>

namespace countx {

enum class Component { kImageEncoder = 0, kTextEncoder, kInteraction, kDecoder };

inline constexpr std::array<Component, 4> kAllComponents{
    Component::kImageEncoder, Component::kTextEncoder, Component::kInteraction,
    Component::kDecoder};

std::string_view component_name(Component c);
/// Accepts image_encoder, text_encoder, interaction, decoder.
Component parse_component(std::string_view name);

/// Patch tokens per image, each (grid^2 x embed_dim), row index py*grid+px.
template <typename Scalar>
struct PatchFeatureMap {
  int grid = 0;
  std::vector<Mat<Scalar>> data;
  std::size_t batch() const { return data.size(); }
};

/// The interaction module output has the same layout as its patch input.
template <typename Scalar>
using FusedFeatureMap = PatchFeatureMap<Scalar>;

template <typename Scalar>
struct TextEmbedding {
  Mat<Scalar> data;  // batch x embed_dim
  std::size_t batch() const { return static_cast<std::size_t>(data.rows()); }
};

template <typename Scalar>
struct DensityMap {
  std::vector<Mat<Scalar>> data;  // each out x out, entries >= 0
  double scale = 60.0;
  std::size_t batch() const { return data.size(); }
};

/// sum(map) / scale, accumulated in double.
template <typename Derived>
double count_from_density(const Eigen::MatrixBase<Derived>& map, double scale) {
  return map.template cast<double>().sum() / scale;
}

template <typename Scalar>
std::vector<double> count_from_density(const DensityMap<Scalar>& d) {
  std::vector<double> counts;
  counts.reserve(d.batch());
  for (const auto& m : d.data) counts.push_back(count_from_density(m, d.scale));
  return counts;
}

/// Text-conditioned density regressor: image encoder, text encoder, feature
/// interaction and density decoder composed as
///   density = decode(interact(encode_image(x), encode_text(t))).
/// Inference methods are const and safe to call concurrently.
template <typename Scalar>
class CountingModel {
 public:
  /// Intermediate state of a training forward pass, consumed by backward().
  struct Tape {
    std::vector<typename ImageEncoder<Scalar>::Cache> image;
    std::vector<typename TextEncoder<Scalar>::Cache> text;
    std::vector<typename InteractionModule<Scalar>::Cache> interaction;
    std::vector<typename DensityDecoder<Scalar>::Cache> decoder;
    std::vector<Mat<Scalar>> text_rows;  // 1 x embed_dim per sample
  };

  /// Randomly initialized model (truncated normal, std 0.02; zero biases).
  /// Default trainability: text encoder frozen, everything else trainable.
  explicit CountingModel(ModelConfig config, std::uint64_t seed = 1234);

  const ModelConfig& config() const { return config_; }

  PatchFeatureMap<Scalar> encode_image(std::span<const Mat<Scalar>> images) const;
  TextEmbedding<Scalar> encode_text(std::span<const TokenSequence> tokens) const;
  FusedFeatureMap<Scalar> interact(const PatchFeatureMap<Scalar>& patches,
                                   const TextEmbedding<Scalar>& text) const;
  DensityMap<Scalar> decode_density(const FusedFeatureMap<Scalar>& fused) const;

  DensityMap<Scalar> forward(std::span<const Mat<Scalar>> images,
                             std::span<const TokenSequence> tokens) const;
  /// Forward with a precomputed text embedding (one row per image).
  DensityMap<Scalar> forward(std::span<const Mat<Scalar>> images,
                             const TextEmbedding<Scalar>& text) const;

  DensityMap<Scalar> forward_train(std::span<const Mat<Scalar>> images,
                                   std::span<const TokenSequence> tokens, Tape& tape) const;
  /// Accumulates dL/dparam into the gradients of trainable parameters.
  void backward(const Tape& tape, std::span<const Mat<Scalar>> ddensity);

  void set_component_trainable(Component c, bool trainable);
  bool component_trainable(Component c) const { return trainable_[static_cast<int>(c)]; }

  void zero_grad();

  /// Calls f(name, Parameter&) for every parameter in a fixed order. Names
  /// are prefixed by the component (image_encoder., text_encoder., ...).
  template <class F>
  void visit_parameters(F&& f) {
    image_encoder_.visit("image_encoder.", f);
    text_encoder_.visit("text_encoder.", f);
    interaction_.visit("interaction.", f);
    decoder_.visit("decoder.", f);
  }
  template <class F>
  void visit_parameters(F&& f) const {
    const_cast<CountingModel*>(this)->visit_parameters(
        [&f](const std::string& name, const nn::Parameter<Scalar>& p) { f(name, p); });
  }

  template <class F>
  void visit_component(Component c, F&& f) {
    switch (c) {
      case Component::kImageEncoder: image_encoder_.visit("image_encoder.", f); break;
      case Component::kTextEncoder: text_encoder_.visit("text_encoder.", f); break;
      case Component::kInteraction: interaction_.visit("interaction.", f); break;
      case Component::kDecoder: decoder_.visit("decoder.", f); break;
    }
  }

  std::size_t parameter_count() const;

 private:
  void check_batch(std::size_t images, std::size_t tokens) const;

  ModelConfig config_;
  ImageEncoder<Scalar> image_encoder_;
  TextEncoder<Scalar> text_encoder_;
  InteractionModule<Scalar> interaction_;
  DensityDecoder<Scalar> decoder_;
  std::array<bool, 4> trainable_{true, true, true, true};
};

/// Component owning a parameter name, from its prefix.
Component component_of(std::string_view parameter_name);

}  // namespace countx
