// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/model/config.hpp"
#include "countx/nn/conv.hpp"
#include "countx/nn/transformer.hpp"
#include "countx/text/tokenizer.hpp"

#include <vector>

namespace countx {

using Eigen::Index;

/// Vision transformer over non-overlapping patches. Input is one normalized
/// image as a channel-major (3 x S*S) matrix; output is the projected patch
/// tokens (grid^2 x embed_dim). The class token is computed but dropped.
template <typename Scalar>
class ImageEncoder {
 public:
  struct Cache {
    Mat<Scalar> patches;    // grid^2 x 3*p*p
    Mat<Scalar> ln_pre_in;  // tokens before ln_pre
    typename nn::LayerNorm<Scalar>::Cache ln_pre;
    std::vector<typename nn::EncoderBlock<Scalar>::Cache> blocks;
    typename nn::LayerNorm<Scalar>::Cache ln_post;
    Mat<Scalar> post;  // patch tokens after ln_post (grid^2 x width)
  };

  ImageEncoder() = default;
  explicit ImageEncoder(const ModelConfig& config);

  void init(Rng& rng);

  Mat<Scalar> forward(const Mat<Scalar>& image, Cache* cache = nullptr) const;
  /// Parameter gradients only; the image gradient is not needed.
  void backward(const Cache& cache, const Mat<Scalar>& dtokens);

  /// Rearranges a (3 x S*S) image into rows of flattened (c, ky, kx) patches.
  Mat<Scalar> patchify(const Mat<Scalar>& image) const;

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "patch_embed.weight", patch_embed);
    f(prefix + "class_embedding", class_embedding);
    f(prefix + "pos_embed", pos_embed);
    ln_pre.visit(prefix + "ln_pre.", f);
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].visit(prefix + "blocks." + std::to_string(i) + ".", f);
    ln_post.visit(prefix + "ln_post.", f);
    f(prefix + "proj", proj);
  }

  nn::Parameter<Scalar> patch_embed;      // width x 3*p*p
  nn::Parameter<Scalar> class_embedding;  // 1 x width
  nn::Parameter<Scalar> pos_embed;        // (grid^2 + 1) x width
  nn::LayerNorm<Scalar> ln_pre;
  std::vector<nn::EncoderBlock<Scalar>> blocks;
  nn::LayerNorm<Scalar> ln_post;
  nn::Parameter<Scalar> proj;  // width x embed_dim

 private:
  int image_size_ = 0;
  int patch_size_ = 0;
};

/// Causal text transformer. Pools the token at the end-marker position (the
/// largest id in the sequence) and projects it to embed_dim.
template <typename Scalar>
class TextEncoder {
 public:
  struct Cache {
    std::vector<std::int32_t> ids;
    std::vector<typename nn::EncoderBlock<Scalar>::Cache> blocks;
    typename nn::LayerNorm<Scalar>::Cache ln_final;
    Index pooled_index = 0;
    Mat<Scalar> pooled;  // 1 x width
  };

  TextEncoder() = default;
  explicit TextEncoder(const ModelConfig& config);

  void init(Rng& rng);

  Mat<Scalar> forward(const TokenSequence& tokens, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const Mat<Scalar>& dembedding);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "token_embedding", token_embedding);
    f(prefix + "pos_embed", pos_embed);
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].visit(prefix + "blocks." + std::to_string(i) + ".", f);
    ln_final.visit(prefix + "ln_final.", f);
    f(prefix + "proj", proj);
  }

  nn::Parameter<Scalar> token_embedding;  // vocab x width
  nn::Parameter<Scalar> pos_embed;        // context x width
  std::vector<nn::EncoderBlock<Scalar>> blocks;
  nn::LayerNorm<Scalar> ln_final;
  nn::Parameter<Scalar> proj;  // width x embed_dim

 private:
  int context_length_ = 0;
};

/// Transformer decoder stack: patch tokens are queries, the text embedding is
/// the single key/value memory token.
template <typename Scalar>
class InteractionModule {
 public:
  struct Cache {
    std::vector<typename nn::DecoderBlock<Scalar>::Cache> blocks;
    typename nn::LayerNorm<Scalar>::Cache norm;
  };

  InteractionModule() = default;
  explicit InteractionModule(const ModelConfig& config);

  void init(Rng& rng);

  Mat<Scalar> forward(const Mat<Scalar>& patches, const Mat<Scalar>& text,
                      Cache* cache = nullptr) const;
  /// Returns (dL/dpatches, dL/dtext).
  std::pair<Mat<Scalar>, Mat<Scalar>> backward(const Mat<Scalar>& text, const Cache& cache,
                                               const Mat<Scalar>& dy);

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].visit(prefix + "blocks." + std::to_string(i) + ".", f);
    norm.visit(prefix + "norm.", f);
  }

  std::vector<nn::DecoderBlock<Scalar>> blocks;
  nn::LayerNorm<Scalar> norm;
};

/// Convolutional upsampling head. Fused tokens are reshaped to an
/// embed_dim-channel map, bilinearly resized to the interaction grid, passed
/// through `upsample_blocks` x (3x3 conv -> ReLU -> 2x bilinear upsample),
/// reduced to one channel by a 1x1 conv and clamped at zero.
template <typename Scalar>
class DensityDecoder {
 public:
  struct Cache {
    Mat<Scalar> resized;                 // embed_dim x grid^2
    std::vector<Mat<Scalar>> conv_in;    // per block
    std::vector<Mat<Scalar>> conv_out;   // per block, before ReLU
    Mat<Scalar> head_in;                 // base_channels x out^2
    Mat<Scalar> head_out;                // 1 x out^2, before clamp
  };

  DensityDecoder() = default;
  explicit DensityDecoder(const ModelConfig& config);

  void init(Rng& rng);

  /// fused: (patch_grid^2 x embed_dim). Returns (out x out).
  Mat<Scalar> forward(const Mat<Scalar>& fused, Cache* cache = nullptr) const;
  Mat<Scalar> backward(const Cache& cache, const Mat<Scalar>& ddensity);

  int output_size() const { return output_size_; }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    for (std::size_t i = 0; i < convs.size(); ++i)
      convs[i].visit(prefix + "blocks." + std::to_string(i) + ".conv.", f);
    head.visit(prefix + "head.", f);
  }

  std::vector<nn::Conv2d<Scalar>> convs;
  nn::Conv2d<Scalar> head;

 private:
  nn::BilinearResize<Scalar> to_grid_;
  std::vector<nn::BilinearResize<Scalar>> upsamplers_;
  std::vector<nn::Extent> conv_extents_;
  int patch_grid_ = 0;
  int output_size_ = 0;
};

}  // namespace countx
