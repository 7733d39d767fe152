// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/model/counting_model.hpp"

namespace countx {

std::string_view component_name(Component c) {
  switch (c) {
    case Component::kImageEncoder: return "image_encoder";
    case Component::kTextEncoder: return "text_encoder";
    case Component::kInteraction: return "interaction";
    case Component::kDecoder: return "decoder";
  }
  return "unknown";
}

Component parse_component(std::string_view name) {
  for (Component c : kAllComponents)
    if (component_name(c) == name) return c;
  throw ConfigError("unknown model component '" + std::string(name) +
                    "' (expected image_encoder, text_encoder, interaction or decoder)");
}

Component component_of(std::string_view parameter_name) {
  const auto dot = parameter_name.find('.');
  return parse_component(parameter_name.substr(0, dot));
}

template <typename Scalar>
CountingModel<Scalar>::CountingModel(ModelConfig config, std::uint64_t seed)
    : config_((config.validate(), std::move(config))), image_encoder_(config_),
      text_encoder_(config_), interaction_(config_), decoder_(config_) {
  Rng rng(seed);
  image_encoder_.init(rng);
  text_encoder_.init(rng);
  interaction_.init(rng);
  decoder_.init(rng);
  set_component_trainable(Component::kTextEncoder, false);
}

template <typename Scalar>
void CountingModel<Scalar>::check_batch(std::size_t images, std::size_t tokens) const {
  if (images != tokens)
    throw InputError("forward: batch of " + std::to_string(images) + " images but " +
                     std::to_string(tokens) + " prompts");
}

template <typename Scalar>
PatchFeatureMap<Scalar> CountingModel<Scalar>::encode_image(
    std::span<const Mat<Scalar>> images) const {
  PatchFeatureMap<Scalar> out;
  out.grid = config_.patch_grid();
  out.data.reserve(images.size());
  for (const auto& im : images) out.data.push_back(image_encoder_.forward(im));
  return out;
}

template <typename Scalar>
TextEmbedding<Scalar> CountingModel<Scalar>::encode_text(
    std::span<const TokenSequence> tokens) const {
  TextEmbedding<Scalar> out;
  out.data.resize(static_cast<Index>(tokens.size()), config_.embed_dim);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.data.row(static_cast<Index>(i)) = text_encoder_.forward(tokens[i]);
  return out;
}

template <typename Scalar>
FusedFeatureMap<Scalar> CountingModel<Scalar>::interact(const PatchFeatureMap<Scalar>& patches,
                                                        const TextEmbedding<Scalar>& text) const {
  if (patches.batch() != text.batch())
    throw InputError("interact: batch mismatch between patches and text");
  if (text.data.cols() != config_.embed_dim)
    throw ConfigError("interact: text embedding width " + std::to_string(text.data.cols()) +
                      " != embed_dim " + std::to_string(config_.embed_dim));
  FusedFeatureMap<Scalar> out;
  out.grid = patches.grid;
  out.data.reserve(patches.batch());
  for (std::size_t i = 0; i < patches.batch(); ++i)
    out.data.push_back(interaction_.forward(patches.data[i], text.data.row(static_cast<Index>(i))));
  return out;
}

template <typename Scalar>
DensityMap<Scalar> CountingModel<Scalar>::decode_density(
    const FusedFeatureMap<Scalar>& fused) const {
  if (fused.grid != config_.patch_grid())
    throw InputError("decode_density: fused grid " + std::to_string(fused.grid) +
                     " != patch grid " + std::to_string(config_.patch_grid()));
  DensityMap<Scalar> out;
  out.scale = config_.density_scale;
  out.data.reserve(fused.batch());
  for (const auto& f : fused.data) out.data.push_back(decoder_.forward(f));
  return out;
}

template <typename Scalar>
DensityMap<Scalar> CountingModel<Scalar>::forward(std::span<const Mat<Scalar>> images,
                                                  std::span<const TokenSequence> tokens) const {
  check_batch(images.size(), tokens.size());
  return decode_density(interact(encode_image(images), encode_text(tokens)));
}

template <typename Scalar>
DensityMap<Scalar> CountingModel<Scalar>::forward(std::span<const Mat<Scalar>> images,
                                                  const TextEmbedding<Scalar>& text) const {
  check_batch(images.size(), text.batch());
  return decode_density(interact(encode_image(images), text));
}

template <typename Scalar>
DensityMap<Scalar> CountingModel<Scalar>::forward_train(std::span<const Mat<Scalar>> images,
                                                        std::span<const TokenSequence> tokens,
                                                        Tape& tape) const {
  check_batch(images.size(), tokens.size());
  const std::size_t n = images.size();
  tape.image.assign(n, {});
  tape.text.assign(n, {});
  tape.interaction.assign(n, {});
  tape.decoder.assign(n, {});
  tape.text_rows.assign(n, {});
  DensityMap<Scalar> out;
  out.scale = config_.density_scale;
  out.data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Mat<Scalar> patches = image_encoder_.forward(images[i], &tape.image[i]);
    tape.text_rows[i] = text_encoder_.forward(tokens[i], &tape.text[i]);
    const Mat<Scalar> fused = interaction_.forward(patches, tape.text_rows[i], &tape.interaction[i]);
    out.data.push_back(decoder_.forward(fused, &tape.decoder[i]));
  }
  return out;
}

template <typename Scalar>
void CountingModel<Scalar>::backward(const Tape& tape, std::span<const Mat<Scalar>> ddensity) {
  if (ddensity.size() != tape.decoder.size())
    throw InputError("backward: gradient batch does not match the forward tape");
  const bool image = component_trainable(Component::kImageEncoder);
  const bool text = component_trainable(Component::kTextEncoder);
  const bool interaction = component_trainable(Component::kInteraction);
  const bool decoder = component_trainable(Component::kDecoder);
  if (!(image || text || interaction || decoder)) return;
  visit_parameters([](const std::string&, nn::Parameter<Scalar>& p) {
    if (p.trainable && !p.has_grad()) p.zero_grad();
  });
  for (std::size_t i = 0; i < ddensity.size(); ++i) {
    const Mat<Scalar> dfused = decoder_.backward(tape.decoder[i], ddensity[i]);
    if (!(image || text || interaction)) continue;
    auto [dpatches, dtext] = interaction_.backward(tape.text_rows[i], tape.interaction[i], dfused);
    if (image) image_encoder_.backward(tape.image[i], dpatches);
    if (text) text_encoder_.backward(tape.text[i], dtext);
  }
}

template <typename Scalar>
void CountingModel<Scalar>::set_component_trainable(Component c, bool trainable) {
  trainable_[static_cast<int>(c)] = trainable;
  visit_component(c, [trainable](const std::string&, nn::Parameter<Scalar>& p) {
    p.trainable = trainable;
  });
}

template <typename Scalar>
void CountingModel<Scalar>::zero_grad() {
  visit_parameters([](const std::string&, nn::Parameter<Scalar>& p) { p.zero_grad(); });
}

template <typename Scalar>
std::size_t CountingModel<Scalar>::parameter_count() const {
  std::size_t n = 0;
  visit_parameters([&n](const std::string&, const nn::Parameter<Scalar>& p) {
    n += static_cast<std::size_t>(p.value.size());
  });
  return n;
}

template class CountingModel<float>;
template class CountingModel<double>;

}  // namespace countx
