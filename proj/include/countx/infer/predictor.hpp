// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/image/rgb_image.hpp"
#include "countx/model/checkpoint.hpp"
#include "countx/text/tokenizer.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <memory>

namespace countx::infer {

/// A prompt after text encoding, reusable across windows.
struct EncodedPrompt {
  std::string text;
  RowVec<double> embedding;  // empty for predictors without a text tower
};

/// Anything that maps a square window plus an encoded prompt to a density
/// map. Implementations must be safe for concurrent const calls.
class DensityPredictor {
 public:
  virtual ~DensityPredictor() = default;

  /// Side of the square input a window is resized to.
  virtual int input_size() const = 0;
  /// Side of the square density map produced per window.
  virtual int output_size() const = 0;
  virtual double density_scale() const = 0;
  virtual std::string model_id() const = 0;
  virtual nlohmann::json describe() const = 0;

  /// Throws InputError for a blank prompt.
  EncodedPrompt encode_prompt(std::string_view text) const;
  /// `window` is input_size x input_size; returns output_size x output_size.
  virtual Mat<double> predict_window(const RgbImage& window, const EncodedPrompt& prompt) const = 0;

  std::size_t prompt_encodings() const { return encodings_.load(); }

 protected:
  virtual RowVec<double> embed(std::string_view text) const = 0;

 private:
  mutable std::atomic<std::size_t> encodings_{0};
};

/// Wraps a trained model and its tokenizer.
template <typename Scalar>
class ModelPredictor final : public DensityPredictor {
 public:
  ModelPredictor(std::shared_ptr<const CountingModel<Scalar>> model,
                 std::shared_ptr<const Tokenizer> tokenizer, CheckpointMetadata metadata = {});

  int input_size() const override { return model_->config().image_size; }
  int output_size() const override { return model_->config().output_size(); }
  double density_scale() const override { return model_->config().density_scale; }
  std::string model_id() const override;
  nlohmann::json describe() const override;
  Mat<double> predict_window(const RgbImage& window, const EncodedPrompt& prompt) const override;

  const CountingModel<Scalar>& model() const { return *model_; }

 protected:
  RowVec<double> embed(std::string_view text) const override;

 private:
  std::shared_ptr<const CountingModel<Scalar>> model_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  CheckpointMetadata metadata_;
};

/// Deterministic stand-in emitting `value` at every output pixel,
/// independently of image and prompt.
class ConstantPredictor final : public DensityPredictor {
 public:
  explicit ConstantPredictor(double value, int input_size = 224, int output_size = 384,
                             double density_scale = 60.0);

  int input_size() const override { return input_size_; }
  int output_size() const override { return output_size_; }
  double density_scale() const override { return scale_; }
  std::string model_id() const override;
  nlohmann::json describe() const override;
  Mat<double> predict_window(const RgbImage& window, const EncodedPrompt& prompt) const override;

  double value() const { return value_; }

 protected:
  RowVec<double> embed(std::string_view) const override { return {}; }

 private:
  double value_;
  int input_size_;
  int output_size_;
  double scale_;
};

/// Resolves a checkpoint argument: a safetensors checkpoint path, or one of
/// the stubs "stub:zero" and "stub:uniform:<value>". Throws ConfigError for
/// a malformed stub and LoadError for an unreadable file.
std::shared_ptr<const DensityPredictor> load_predictor(const std::string& checkpoint,
                                                       const std::filesystem::path& merges = {});

}  // namespace countx::infer
