// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/infer/predictor.hpp"

#include <charconv>
#include <cmath>

namespace countx::infer {

EncodedPrompt DensityPredictor::encode_prompt(std::string_view text) const {
  std::string cleaned = clean_text(text);
  if (cleaned.empty()) throw InputError("empty description");
  ++encodings_;
  EncodedPrompt prompt;
  prompt.embedding = embed(cleaned);
  prompt.text = std::move(cleaned);
  return prompt;
}

template <typename Scalar>
ModelPredictor<Scalar>::ModelPredictor(std::shared_ptr<const CountingModel<Scalar>> model,
                                       std::shared_ptr<const Tokenizer> tokenizer,
                                       CheckpointMetadata metadata)
    : model_(std::move(model)), tokenizer_(std::move(tokenizer)), metadata_(std::move(metadata)) {
  if (!model_ || !tokenizer_) throw ConfigError("predictor needs a model and a tokenizer");
  if (tokenizer_->vocab_size() > model_->config().vocab_size ||
      tokenizer_->context_length() != model_->config().context_length)
    throw ConfigError("tokenizer does not match the model's text tower");
}

template <typename Scalar>
std::string ModelPredictor<Scalar>::model_id() const {
  return metadata_.model_id.empty() ? std::string("countx") : metadata_.model_id;
}

template <typename Scalar>
nlohmann::json ModelPredictor<Scalar>::describe() const {
  const auto& c = model_->config();
  nlohmann::json j{{"model_id", model_id()},
                   {"kind", "model"},
                   {"epoch", metadata_.epoch},
                   {"seed", metadata_.seed},
                   {"parameters", model_->parameter_count()},
                   {"image_size", c.image_size},
                   {"output_size", c.output_size()},
                   {"embed_dim", c.embed_dim},
                   {"density_scale", c.density_scale},
                   {"config", c}};
  j["val_mae"] = std::isfinite(metadata_.val_mae) ? nlohmann::json(metadata_.val_mae) : nlohmann::json();
  return j;
}

template <typename Scalar>
RowVec<double> ModelPredictor<Scalar>::embed(std::string_view text) const {
  const TokenSequence tokens = tokenizer_->encode(text);
  const auto emb = model_->encode_text(std::span<const TokenSequence>(&tokens, 1));
  return emb.data.row(0).template cast<double>();
}

template <typename Scalar>
Mat<double> ModelPredictor<Scalar>::predict_window(const RgbImage& window, const EncodedPrompt& prompt) const {
  const auto& c = model_->config();
  if (prompt.embedding.size() != c.embed_dim) throw InputError("prompt was not encoded by this model");
  const Mat<Scalar> input = to_model_input<Scalar>(window, c);
  TextEmbedding<Scalar> text;
  text.data = prompt.embedding.template cast<Scalar>();
  const auto density = model_->forward(std::span<const Mat<Scalar>>(&input, 1), text);
  return density.data.front().template cast<double>();
}

template class ModelPredictor<float>;
template class ModelPredictor<double>;

ConstantPredictor::ConstantPredictor(double value, int input_size, int output_size, double density_scale)
    : value_(value), input_size_(input_size), output_size_(output_size), scale_(density_scale) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("stub density must be finite and >= 0");
  if (input_size <= 0 || output_size <= 0 || !(density_scale > 0.0))
    throw ConfigError("invalid stub geometry");
}

std::string ConstantPredictor::model_id() const {
  if (value_ == 0.0) return "stub:zero";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value_);
  return "stub:uniform:" + std::string(buf, end);
}

nlohmann::json ConstantPredictor::describe() const {
  return {{"model_id", model_id()},  {"kind", "stub"},
          {"epoch", 0},              {"val_mae", nullptr},
          {"image_size", input_size_}, {"output_size", output_size_},
          {"density_scale", scale_}, {"value", value_}};
}

Mat<double> ConstantPredictor::predict_window(const RgbImage& window, const EncodedPrompt&) const {
  if (window.width != input_size_ || window.height != input_size_)
    throw InputError("window must be " + std::to_string(input_size_) + " pixels square");
  return Mat<double>::Constant(output_size_, output_size_, value_);
}

std::shared_ptr<const DensityPredictor> load_predictor(const std::string& checkpoint,
                                                       const std::filesystem::path& merges) {
  constexpr std::string_view kStub = "stub:";
  if (checkpoint.starts_with(kStub)) {
    const std::string_view rest = std::string_view(checkpoint).substr(kStub.size());
    if (rest == "zero") return std::make_shared<ConstantPredictor>(0.0);
    constexpr std::string_view kUniform = "uniform:";
    if (rest.starts_with(kUniform)) {
      const std::string_view num = rest.substr(kUniform.size());
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
      if (ec == std::errc() && ptr == num.data() + num.size() && !num.empty())
        return std::make_shared<ConstantPredictor>(value);
    }
    throw ConfigError("unknown stub '" + checkpoint + "' (expected stub:zero or stub:uniform:<value>)");
  }
  CheckpointMetadata meta;
  auto model = std::make_shared<const CountingModel<float>>(load_checkpoint<float>(checkpoint, &meta));
  if (meta.model_id.empty()) meta.model_id = std::filesystem::path(checkpoint).stem().string();
  auto tokenizer = make_tokenizer(model->config(), merges);
  return std::make_shared<ModelPredictor<float>>(std::move(model), std::move(tokenizer), meta);
}

}  // namespace countx::infer
