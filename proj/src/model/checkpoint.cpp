// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/model/checkpoint.hpp"

#include "countx/io/safetensors.hpp"

#include <cmath>
#include <sstream>

namespace countx {

namespace {
constexpr const char* kFormatTag = "countx-checkpoint-v1";

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}
}  // namespace

template <typename Scalar>
Checkpoint<Scalar> snapshot(const CountingModel<Scalar>& model, CheckpointMetadata metadata) {
  Checkpoint<Scalar> ck;
  ck.config = model.config();
  ck.metadata = std::move(metadata);
  model.visit_parameters([&ck](const std::string& name, const nn::Parameter<Scalar>& p) {
    ck.parameters.emplace(name, p.value);
  });
  return ck;
}

template <typename Scalar>
void restore(CountingModel<Scalar>& model, const Checkpoint<Scalar>& ck) {
  if (!(ck.config == model.config()))
    throw ConfigError("checkpoint config does not match the model config");
  std::size_t used = 0;
  model.visit_parameters([&](const std::string& name, nn::Parameter<Scalar>& p) {
    const auto it = ck.parameters.find(name);
    if (it == ck.parameters.end()) throw ConfigError("checkpoint is missing parameter " + name);
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols())
      throw ConfigError("checkpoint parameter " + name + " has the wrong shape");
    p.value = it->second;
    ++used;
  });
  if (used != ck.parameters.size())
    throw ConfigError("checkpoint has parameters the model does not define");
}

template <typename Scalar>
void write_checkpoint(const Checkpoint<Scalar>& ck, const std::filesystem::path& path) {
  io::TensorArchive archive;
  for (const auto& [name, m] : ck.parameters) archive.tensors.emplace(name, io::to_record(m));
  nlohmann::json config_json = ck.config;
  archive.metadata["format"] = kFormatTag;
  archive.metadata["config"] = config_json.dump();
  archive.metadata["epoch"] = std::to_string(ck.metadata.epoch);
  archive.metadata["val_mae"] =
      std::isnan(ck.metadata.val_mae) ? "nan" : nlohmann::json(ck.metadata.val_mae).dump();
  archive.metadata["seed"] = std::to_string(ck.metadata.seed);
  archive.metadata["model_id"] = ck.metadata.model_id;
  archive.metadata["payload_digest"] = hex64(io::payload_digest(archive));
  write_safetensors(path, archive);
}

template <typename Scalar>
Checkpoint<Scalar> read_checkpoint(const std::filesystem::path& path,
                                   const std::optional<ModelConfig>& expected_config) {
  const io::TensorArchive archive = io::read_safetensors(path);
  const auto meta = [&](const char* key) -> const std::string& {
    const auto it = archive.metadata.find(key);
    if (it == archive.metadata.end())
      throw LoadError(path.string() + ": not a countx checkpoint (missing '" + key + "')");
    return it->second;
  };
  if (meta("format") != kFormatTag) throw LoadError(path.string() + ": unknown checkpoint format");
  if (meta("payload_digest") != hex64(io::payload_digest(archive)))
    throw LoadError(path.string() + ": payload digest mismatch (corrupt file)");

  Checkpoint<Scalar> ck;
  try {
    nlohmann::json::parse(meta("config")).get_to(ck.config);
    ck.metadata.epoch = std::stoi(meta("epoch"));
    const std::string& mae = meta("val_mae");
    ck.metadata.val_mae =
        mae == "nan" ? std::numeric_limits<double>::quiet_NaN() : nlohmann::json::parse(mae).template get<double>();
    ck.metadata.seed = std::stoull(meta("seed"));
    ck.metadata.model_id = meta("model_id");
  } catch (const std::exception& e) {
    if (dynamic_cast<const LoadError*>(&e)) throw;
    throw LoadError(path.string() + ": malformed checkpoint metadata (" + e.what() + ")");
  }
  ck.config.validate();
  if (expected_config && !(*expected_config == ck.config))
    throw ConfigError(path.string() + ": checkpoint config does not match the requested config");
  for (const auto& [name, rec] : archive.tensors) {
    if (rec.shape.size() != 2) throw LoadError(path.string() + ": tensor " + name + " is not 2-D");
    ck.parameters.emplace(name, io::to_matrix<Scalar>(rec, rec.shape[0], rec.shape[1]));
  }
  return ck;
}

#define COUNTX_INSTANTIATE(S)                                                                 \
  template Checkpoint<S> snapshot<S>(const CountingModel<S>&, CheckpointMetadata);            \
  template void restore<S>(CountingModel<S>&, const Checkpoint<S>&);                          \
  template void write_checkpoint<S>(const Checkpoint<S>&, const std::filesystem::path&);      \
  template Checkpoint<S> read_checkpoint<S>(const std::filesystem::path&,                     \
                                            const std::optional<ModelConfig>&);

COUNTX_INSTANTIATE(float)
COUNTX_INSTANTIATE(double)
#undef COUNTX_INSTANTIATE

}  // namespace countx
