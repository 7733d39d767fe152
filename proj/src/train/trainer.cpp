// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/train/trainer.hpp"

#include "countx/core/parallel.hpp"
#include "countx/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace countx::train {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(base_lr >= 0.0)) throw ConfigError("base_lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (total_epochs <= 0) throw ConfigError("total_epochs must be positive");
  if (!(warmup_epochs >= 0.0 && warmup_epochs < total_epochs))
    throw ConfigError("warmup_epochs must satisfy 0 <= warmup < total_epochs");
  if (!(density_scale > 0.0)) throw ConfigError("density_scale must be positive");
  if (!(pixel_drop_p >= 0.0 && pixel_drop_p < 1.0)) throw ConfigError("pixel_drop_p must lie in [0, 1)");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  augment.validate();
  validation.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size},
       {"base_lr", c.base_lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"eps", c.eps},
       {"weight_decay", c.weight_decay},
       {"warmup_epochs", c.warmup_epochs},
       {"total_epochs", c.total_epochs},
       {"density_scale", c.density_scale},
       {"pixel_drop_p", c.pixel_drop_p},
       {"seed", c.seed},
       {"freeze", {{"text_encoder", c.freeze.text_encoder}, {"image_encoder", c.freeze.image_encoder}}},
       {"workers", c.workers},
       {"augment", c.augment},
       {"validation", c.validation}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  static const std::vector<std::string> kKeys{"batch_size",   "base_lr",       "beta1",         "beta2",
                                              "eps",          "weight_decay",  "warmup_epochs", "total_epochs",
                                              "density_scale", "pixel_drop_p", "seed",          "freeze",
                                              "workers",      "augment",       "validation"};
  for (const auto& [key, _] : j.items())
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      throw ConfigError("unknown training config key '" + key + "'");
  c = {};
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.base_lr = j.value("base_lr", c.base_lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.total_epochs = j.value("total_epochs", c.total_epochs);
    c.density_scale = j.value("density_scale", c.density_scale);
    c.pixel_drop_p = j.value("pixel_drop_p", c.pixel_drop_p);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    if (j.contains("freeze")) {
      const auto& f = j.at("freeze");
      c.freeze.text_encoder = f.value("text_encoder", c.freeze.text_encoder);
      c.freeze.image_encoder = f.value("image_encoder", c.freeze.image_encoder);
    }
    if (j.contains("augment")) c.augment = j.at("augment").get<augment::AugmentConfig>();
    if (j.contains("validation")) c.validation = j.at("validation").get<infer::InferenceConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.validate();
}

SampleSource memory_source(std::vector<data::LoadedSample> samples) {
  auto shared = std::make_shared<const std::vector<data::LoadedSample>>(std::move(samples));
  return {shared->size(), [shared](std::size_t i) { return shared->at(i); }};
}

SampleSource record_source(std::vector<data::SampleRecord> records) {
  auto shared = std::make_shared<const std::vector<data::SampleRecord>>(std::move(records));
  return {shared->size(), [shared](std::size_t i) { return data::load_sample(shared->at(i)); }};
}

template <typename Scalar>
void apply_freeze(CountingModel<Scalar>& model, const FreezeConfig& freeze) {
  model.set_component_trainable(Component::kTextEncoder, !freeze.text_encoder);
  model.set_component_trainable(Component::kImageEncoder, !freeze.image_encoder);
  model.set_component_trainable(Component::kInteraction, true);
  model.set_component_trainable(Component::kDecoder, true);
}

namespace {

template <typename Scalar>
struct PreparedSample {
  Mat<Scalar> input;
  Mat<double> target;
  TokenSequence tokens;
  std::string id;
};

}  // namespace

template <typename Scalar>
EpochStats train_epoch(CountingModel<Scalar>& model, AdamW<Scalar>& optimizer, const SampleSource& source,
                       const Tokenizer& tokenizer, const TrainConfig& config, int epoch) {
  if (source.size == 0) throw ConfigError("training split is empty");
  const ModelConfig& mc = model.config();
  augment::AugmentConfig aug = config.augment;
  aug.image_size = mc.image_size;
  const data::Size2 in_size{mc.image_size, mc.image_size};
  const data::Size2 out_size{mc.output_size(), mc.output_size()};
  const auto e = static_cast<std::uint64_t>(epoch);

  std::vector<std::size_t> order(source.size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = derive_rng(config.seed, {e, 0});
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  const std::size_t batches = (source.size + config.batch_size - 1) / config.batch_size;
  EpochStats stats;
  double loss_sum = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * config.batch_size;
    const std::size_t count = std::min(config.batch_size, source.size - begin);
    std::vector<PreparedSample<Scalar>> batch(count);
    parallel_for(count, config.workers, [&](std::size_t k) {
      const std::size_t index = order[begin + k];
      const data::LoadedSample sample = source.load(index);
      Rng rng = derive_rng(config.seed, {e, 1, index});
      const augment::TrainSample t = augment::augment_sample(sample, index, source.size, source.load, aug, rng);
      auto& p = batch[k];
      p.input = to_model_input<Scalar>(t.image, mc);
      p.target = data::build_density_target(t.dots, in_size, out_size).data * config.density_scale;
      p.tokens = tokenizer.encode(t.description);
      p.id = sample.id;
    });
    std::vector<Mat<Scalar>> inputs;
    std::vector<Mat<double>> targets;
    std::vector<TokenSequence> tokens;
    for (auto& p : batch) {
      inputs.push_back(std::move(p.input));
      targets.push_back(std::move(p.target));
      tokens.push_back(std::move(p.tokens));
    }

    typename CountingModel<Scalar>::Tape tape;
    const auto density = model.forward_train(inputs, tokens, tape);
    Rng mask_rng = derive_rng(config.seed, {e, 2, b});
    const auto loss = masked_loss<Scalar>(density.data, targets, config.pixel_drop_p, mask_rng);
    if (!std::isfinite(loss.loss)) {
      std::string ids;
      for (const auto& p : batch) ids += (ids.empty() ? "" : ", ") + p.id;
      throw TrainingError("non-finite loss " + std::to_string(loss.loss) + " at epoch " + std::to_string(epoch) +
                          ", batch " + std::to_string(b) + " (samples: " + ids + ")");
    }
    model.zero_grad();
    model.backward(tape, loss.grad);
    const double lr =
        lr_at(static_cast<double>(epoch - 1) + static_cast<double>(b) / static_cast<double>(batches),
              config.schedule());
    optimizer.step(model, lr);
    loss_sum += loss.loss;
    stats.last_lr = lr;
    ++stats.steps;
  }
  stats.mean_loss = loss_sum / static_cast<double>(batches);
  return stats;
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_mae", r.val_mae}, {"val_rmse", r.val_rmse},
       {"lr", r.lr}};
}

std::size_t select_best_epoch(std::span<const EpochRecord> records) {
  if (records.empty()) throw InputError("no epoch records");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].val_mae < records[best].val_mae) best = i;
  return best;
}

template <typename Scalar>
std::pair<double, double> validate_model(const CountingModel<Scalar>& model,
                                         std::shared_ptr<const Tokenizer> tokenizer, const SampleSource& val,
                                         const infer::InferenceConfig& config) {
  if (val.size == 0) throw ConfigError("validation split is empty");
  const std::shared_ptr<const CountingModel<Scalar>> view(std::shared_ptr<void>{}, &model);
  const infer::ModelPredictor<Scalar> predictor(view, std::move(tokenizer));
  std::vector<double> predicted, actual;
  for (std::size_t i = 0; i < val.size; ++i) {
    const auto sample = val.load(i);
    predicted.push_back(infer::predict(predictor, sample.image, sample.description, config).count);
    actual.push_back(static_cast<double>(sample.dots.size()));
  }
  return {eval::mae(predicted, actual), eval::rmse(predicted, actual)};
}

template <typename Scalar>
FitResult<Scalar> fit(CountingModel<Scalar>& model, const SampleSource& train, const SampleSource& val,
                      std::shared_ptr<const Tokenizer> tokenizer, const TrainConfig& config,
                      const FitOptions& options) {
  config.validate();
  if (train.size == 0) throw ConfigError("training split is empty");
  if (val.size == 0) throw ConfigError("validation split is empty");
  if (config.density_scale != model.config().density_scale)
    throw ConfigError("training density_scale differs from the model's");
  if (!tokenizer) throw ConfigError("fit needs a tokenizer");

  std::ofstream log;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    std::ofstream(*options.out_dir / "train_config.json")
        << nlohmann::json{{"train", config}, {"model", model.config()}}.dump(2) << '\n';
    log.open(*options.out_dir / "metrics.jsonl", std::ios::app);
    if (!log) throw LoadError("cannot write " + (*options.out_dir / "metrics.jsonl").string());
  }

  apply_freeze(model, config.freeze);
  AdamW<Scalar> optimizer(config.optimizer());
  FitResult<Scalar> result;
  for (int epoch = 1; epoch <= config.total_epochs; ++epoch) {
    const EpochStats stats = train_epoch(model, optimizer, train, *tokenizer, config, epoch);
    const auto [mae, rmse] = validate_model(model, tokenizer, val, config.validation);
    EpochRecord rec{epoch, stats.mean_loss, mae, rmse, stats.last_lr};
    result.records.push_back(rec);

    CheckpointMetadata meta;
    meta.epoch = epoch;
    meta.val_mae = mae;
    meta.seed = config.seed;
    meta.model_id = "countx-epoch" + std::to_string(epoch);
    if (result.records.size() == 1 || mae < result.records[result.best_index].val_mae) {
      result.best_index = result.records.size() - 1;
      result.best = snapshot(model, meta);
      if (options.out_dir) write_checkpoint(result.best, *options.out_dir / "best.safetensors");
    }
    if (options.out_dir) {
      save_checkpoint(model, *options.out_dir / "last.safetensors", meta);
      log << nlohmann::json(rec).dump() << '\n' << std::flush;
    }
    if (options.on_epoch) options.on_epoch(rec);
  }
  return result;
}

#define COUNTX_INSTANTIATE(S)                                                                                  \
  template void apply_freeze(CountingModel<S>&, const FreezeConfig&);                                          \
  template EpochStats train_epoch(CountingModel<S>&, AdamW<S>&, const SampleSource&, const Tokenizer&,        \
                                  const TrainConfig&, int);                                                    \
  template std::pair<double, double> validate_model(const CountingModel<S>&, std::shared_ptr<const Tokenizer>, \
                                                    const SampleSource&, const infer::InferenceConfig&);       \
  template FitResult<S> fit(CountingModel<S>&, const SampleSource&, const SampleSource&,                      \
                            std::shared_ptr<const Tokenizer>, const TrainConfig&, const FitOptions&);
COUNTX_INSTANTIATE(float)
COUNTX_INSTANTIATE(double)
#undef COUNTX_INSTANTIATE

}  // namespace countx::train
