// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/model/modules.hpp"

namespace countx {

// ---------------------------------------------------------------- image tower

template <typename Scalar>
ImageEncoder<Scalar>::ImageEncoder(const ModelConfig& c)
    : ln_pre(c.image_width), ln_post(c.image_width), image_size_(c.image_size),
      patch_size_(c.patch_size) {
  const Index grid = c.patch_grid();
  patch_embed.resize(c.image_width, 3 * c.patch_size * c.patch_size);
  class_embedding.resize(1, c.image_width);
  class_embedding.decay = false;
  pos_embed.resize(grid * grid + 1, c.image_width);
  pos_embed.decay = false;
  blocks.reserve(static_cast<std::size_t>(c.image_layers));
  for (int i = 0; i < c.image_layers; ++i)
    blocks.emplace_back(c.image_width, c.image_heads, c.mlp_ratio * c.image_width, false);
  proj.resize(c.image_width, c.embed_dim);
}

template <typename Scalar>
void ImageEncoder<Scalar>::init(Rng& rng) {
  nn::truncated_normal(patch_embed.value, Scalar(0.02), rng);
  nn::truncated_normal(class_embedding.value, Scalar(0.02), rng);
  nn::truncated_normal(pos_embed.value, Scalar(0.02), rng);
  for (auto& b : blocks) b.init(rng);
  nn::truncated_normal(proj.value, Scalar(0.02), rng);
}

template <typename Scalar>
Mat<Scalar> ImageEncoder<Scalar>::patchify(const Mat<Scalar>& image) const {
  const Index s = image_size_;
  const Index p = patch_size_;
  const Index g = s / p;
  if (image.rows() != 3 || image.cols() != s * s)
    throw InputError("encode_image: expected a 3 x " + std::to_string(s) + "x" +
                     std::to_string(s) + " image, got " + std::to_string(image.rows()) + " x " +
                     std::to_string(image.cols()) + " values");
  Mat<Scalar> patches(g * g, 3 * p * p);
  for (Index py = 0; py < g; ++py) {
    for (Index px = 0; px < g; ++px) {
      auto row = patches.row(py * g + px);
      for (Index c = 0; c < 3; ++c) {
        for (Index ky = 0; ky < p; ++ky) {
          const Scalar* src = image.row(c).data() + (py * p + ky) * s + px * p;
          for (Index kx = 0; kx < p; ++kx) row((c * p + ky) * p + kx) = src[kx];
        }
      }
    }
  }
  return patches;
}

template <typename Scalar>
Mat<Scalar> ImageEncoder<Scalar>::forward(const Mat<Scalar>& image, Cache* cache) const {
  Mat<Scalar> patches = patchify(image);
  const Index n = patches.rows();
  Mat<Scalar> x(n + 1, patch_embed.value.rows());
  x.row(0) = class_embedding.value.row(0);
  x.bottomRows(n).noalias() = patches * patch_embed.value.transpose();
  x += pos_embed.value;
  if (!cache) {
    Mat<Scalar> h = ln_pre.forward(x);
    for (const auto& b : blocks) h = b.forward(h);
    return ln_post.forward(h.bottomRows(n)) * proj.value;
  }
  cache->patches = std::move(patches);
  cache->ln_pre_in = x;
  Mat<Scalar> h = ln_pre.forward(x, &cache->ln_pre);
  cache->blocks.resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) h = blocks[i].forward(h, &cache->blocks[i]);
  cache->post = ln_post.forward(h.bottomRows(n), &cache->ln_post);
  return cache->post * proj.value;
}

template <typename Scalar>
void ImageEncoder<Scalar>::backward(const Cache& cache, const Mat<Scalar>& dtokens) {
  if (proj.trainable) proj.grad.noalias() += cache.post.transpose() * dtokens;
  const Mat<Scalar> dpost = dtokens * proj.value.transpose();
  const Index n = dpost.rows();
  Mat<Scalar> dh = Mat<Scalar>::Zero(n + 1, dpost.cols());
  dh.bottomRows(n) = ln_post.backward(cache.ln_post, dpost);
  for (std::size_t i = blocks.size(); i-- > 0;) dh = blocks[i].backward(cache.blocks[i], dh);
  const Mat<Scalar> dx = ln_pre.backward(cache.ln_pre, dh);
  if (class_embedding.trainable) class_embedding.grad.row(0) += dx.row(0);
  if (pos_embed.trainable) pos_embed.grad += dx;
  if (patch_embed.trainable)
    patch_embed.grad.noalias() += dx.bottomRows(n).transpose() * cache.patches;
}

// ----------------------------------------------------------------- text tower

template <typename Scalar>
TextEncoder<Scalar>::TextEncoder(const ModelConfig& c)
    : ln_final(c.text_width), context_length_(c.context_length) {
  token_embedding.resize(c.vocab_size, c.text_width);
  token_embedding.decay = false;
  pos_embed.resize(c.context_length, c.text_width);
  pos_embed.decay = false;
  blocks.reserve(static_cast<std::size_t>(c.text_layers));
  for (int i = 0; i < c.text_layers; ++i)
    blocks.emplace_back(c.text_width, c.text_heads, c.mlp_ratio * c.text_width, true);
  proj.resize(c.text_width, c.embed_dim);
}

template <typename Scalar>
void TextEncoder<Scalar>::init(Rng& rng) {
  nn::truncated_normal(token_embedding.value, Scalar(0.02), rng);
  nn::truncated_normal(pos_embed.value, Scalar(0.02), rng);
  for (auto& b : blocks) b.init(rng);
  nn::truncated_normal(proj.value, Scalar(0.02), rng);
}

template <typename Scalar>
Mat<Scalar> TextEncoder<Scalar>::forward(const TokenSequence& tokens, Cache* cache) const {
  const auto& ids = tokens.ids;
  if (static_cast<int>(ids.size()) != context_length_)
    throw InputError("encode_text: token sequence length " + std::to_string(ids.size()) +
                     " != context_length " + std::to_string(context_length_));
  const Index vocab = token_embedding.value.rows();
  Mat<Scalar> x(context_length_, token_embedding.value.cols());
  Index pooled_index = 0;
  for (Index t = 0; t < context_length_; ++t) {
    const auto id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= vocab) throw InputError("encode_text: token id out of range");
    x.row(t) = token_embedding.value.row(id);
    if (id > ids[static_cast<std::size_t>(pooled_index)]) pooled_index = t;
  }
  x += pos_embed.value;
  if (!cache) {
    for (const auto& b : blocks) x = b.forward(x);
    return ln_final.forward(x.row(pooled_index)) * proj.value;
  }
  cache->ids = ids;
  cache->pooled_index = pooled_index;
  cache->blocks.resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) x = blocks[i].forward(x, &cache->blocks[i]);
  cache->pooled = ln_final.forward(x.row(pooled_index), &cache->ln_final);
  return cache->pooled * proj.value;
}

template <typename Scalar>
void TextEncoder<Scalar>::backward(const Cache& cache, const Mat<Scalar>& dembedding) {
  if (proj.trainable) proj.grad.noalias() += cache.pooled.transpose() * dembedding;
  const Mat<Scalar> dpooled = dembedding * proj.value.transpose();
  Mat<Scalar> dx = Mat<Scalar>::Zero(context_length_, dpooled.cols());
  dx.row(cache.pooled_index) = ln_final.backward(cache.ln_final, dpooled);
  for (std::size_t i = blocks.size(); i-- > 0;) dx = blocks[i].backward(cache.blocks[i], dx);
  if (pos_embed.trainable) pos_embed.grad += dx;
  if (token_embedding.trainable) {
    for (Index t = 0; t < context_length_; ++t)
      token_embedding.grad.row(cache.ids[static_cast<std::size_t>(t)]) += dx.row(t);
  }
}

// --------------------------------------------------------- feature interaction

template <typename Scalar>
InteractionModule<Scalar>::InteractionModule(const ModelConfig& c) : norm(c.embed_dim) {
  blocks.reserve(static_cast<std::size_t>(c.interaction_layers));
  for (int i = 0; i < c.interaction_layers; ++i)
    blocks.emplace_back(c.embed_dim, c.interaction_heads, c.mlp_ratio * c.embed_dim);
}

template <typename Scalar>
void InteractionModule<Scalar>::init(Rng& rng) {
  for (auto& b : blocks) b.init(rng);
}

template <typename Scalar>
Mat<Scalar> InteractionModule<Scalar>::forward(const Mat<Scalar>& patches, const Mat<Scalar>& text,
                                               Cache* cache) const {
  const Index e = norm.gamma.value.cols();
  if (patches.cols() != e || text.cols() != e)
    throw ConfigError("interact: feature width mismatch (patches " +
                      std::to_string(patches.cols()) + ", text " + std::to_string(text.cols()) +
                      ", expected " + std::to_string(e) + ")");
  Mat<Scalar> x = patches;
  if (!cache) {
    for (const auto& b : blocks) x = b.forward(x, text);
    return norm.forward(x);
  }
  cache->blocks.resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) x = blocks[i].forward(x, text, &cache->blocks[i]);
  return norm.forward(x, &cache->norm);
}

template <typename Scalar>
std::pair<Mat<Scalar>, Mat<Scalar>> InteractionModule<Scalar>::backward(const Mat<Scalar>& text,
                                                                        const Cache& cache,
                                                                        const Mat<Scalar>& dy) {
  Mat<Scalar> dx = norm.backward(cache.norm, dy);
  Mat<Scalar> dtext = Mat<Scalar>::Zero(text.rows(), text.cols());
  for (std::size_t i = blocks.size(); i-- > 0;) {
    auto [dnext, dmem] = blocks[i].backward(text, cache.blocks[i], dx);
    dx = std::move(dnext);
    dtext += dmem;
  }
  return {std::move(dx), std::move(dtext)};
}

// -------------------------------------------------------------------- decoder

template <typename Scalar>
DensityDecoder<Scalar>::DensityDecoder(const ModelConfig& c)
    : head(c.decoder_base_channels, 1, 1), patch_grid_(c.patch_grid()),
      output_size_(c.output_size()) {
  const Index grid = c.interaction_grid;
  to_grid_ = nn::BilinearResize<Scalar>({patch_grid_, patch_grid_}, {grid, grid});
  Index side = grid;
  for (int i = 0; i < c.decoder_upsample_blocks; ++i) {
    convs.emplace_back(i == 0 ? c.embed_dim : c.decoder_base_channels, c.decoder_base_channels, 3);
    conv_extents_.push_back({side, side});
    upsamplers_.emplace_back(nn::Extent{side, side}, nn::Extent{2 * side, 2 * side});
    side *= 2;
  }
}

template <typename Scalar>
void DensityDecoder<Scalar>::init(Rng& rng) {
  for (auto& c : convs) c.init(rng);
  head.init(rng);
}

template <typename Scalar>
Mat<Scalar> DensityDecoder<Scalar>::forward(const Mat<Scalar>& fused, Cache* cache) const {
  const Index cells = static_cast<Index>(patch_grid_) * patch_grid_;
  if (fused.rows() != cells || fused.cols() != convs.front().in_channels())
    throw InputError("decode_density: fused map shape does not match the patch grid");
  Mat<Scalar> x = to_grid_.forward(fused.transpose());
  if (cache) {
    cache->resized = x;
    cache->conv_in.clear();
    cache->conv_out.clear();
  }
  for (std::size_t i = 0; i < convs.size(); ++i) {
    Mat<Scalar> pre = convs[i].forward(x, conv_extents_[i]);
    Mat<Scalar> up = upsamplers_[i].forward(nn::relu(pre));
    if (cache) {
      cache->conv_in.push_back(std::move(x));
      cache->conv_out.push_back(std::move(pre));
    }
    x = std::move(up);
  }
  const nn::Extent out{output_size_, output_size_};
  Mat<Scalar> logits = head.forward(x, out);
  Mat<Scalar> density = Eigen::Map<const Mat<Scalar>>(logits.data(), output_size_, output_size_)
                            .cwiseMax(Scalar(0));
  if (cache) {
    cache->head_in = std::move(x);
    cache->head_out = std::move(logits);
  }
  return density;
}

template <typename Scalar>
Mat<Scalar> DensityDecoder<Scalar>::backward(const Cache& cache, const Mat<Scalar>& ddensity) {
  const nn::Extent out{output_size_, output_size_};
  const Mat<Scalar> dflat = Eigen::Map<const Mat<Scalar>>(ddensity.data(), 1, out.pixels());
  Mat<Scalar> dx = head.backward(cache.head_in, out, nn::relu_backward(cache.head_out, dflat));
  for (std::size_t i = convs.size(); i-- > 0;) {
    const Mat<Scalar> dact = upsamplers_[i].backward(dx);
    dx = convs[i].backward(cache.conv_in[i], conv_extents_[i],
                           nn::relu_backward(cache.conv_out[i], dact));
  }
  return to_grid_.backward(dx).transpose();
}

template class ImageEncoder<float>;
template class ImageEncoder<double>;
template class TextEncoder<float>;
template class TextEncoder<double>;
template class InteractionModule<float>;
template class InteractionModule<double>;
template class DensityDecoder<float>;
template class DensityDecoder<double>;

}  // namespace countx
