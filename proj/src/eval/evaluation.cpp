// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/eval/evaluation.hpp"

#include "countx/infer/overlay.hpp"
#include "countx/io/image_io.hpp"

#include <array>
#include <cmath>
#include <cstdio>

namespace countx::eval {

namespace {

void check_lengths(std::span<const double> p, std::span<const double> a) {
  if (p.empty()) throw InputError("metrics need at least one sample");
  if (p.size() != a.size())
    throw InputError("metrics: " + std::to_string(p.size()) + " predictions for " + std::to_string(a.size()) +
                     " targets");
}

}  // namespace

double mae(std::span<const double> predicted, std::span<const double> actual) {
  check_lengths(predicted, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) s += std::abs(predicted[i] - actual[i]);
  return s / static_cast<double>(predicted.size());
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  check_lengths(predicted, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) s += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
  return std::sqrt(s / static_cast<double>(predicted.size()));
}

std::string_view prompt_mode_name(PromptMode mode) {
  return mode == PromptMode::kClassName ? "class-name" : "description";
}

PromptMode parse_prompt_mode(std::string_view name) {
  if (name == "class-name") return PromptMode::kClassName;
  if (name == "description") return PromptMode::kDescription;
  throw ConfigError("unknown prompt mode '" + std::string(name) + "' (expected class-name or description)");
}

std::string prompt_for(const data::SampleRecord& record, PromptMode mode) {
  const std::string text = clean_text(mode == PromptMode::kClassName ? record.class_name : record.description);
  if (text.empty())
    throw InputError(record.filename + ": no " + std::string(prompt_mode_name(mode)) + " prompt");
  return text;
}

nlohmann::json EvalResult::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records)
    recs.push_back({{"filename", r.filename},
                    {"prompt", r.prompt},
                    {"predicted", r.predicted},
                    {"actual", r.actual},
                    {"abs_error", r.abs_error}});
  return {{"split", split},        {"prompt_mode", prompt_mode_name(prompt_mode)},
          {"model_id", model_id},  {"n", n},
          {"mae", mae},            {"rmse", rmse},
          {"records", std::move(recs)}};
}

std::string summary_header() {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-8s %-12s %6s %10s %10s", "split", "prompt", "N", "MAE", "RMSE");
  return buf;
}

std::string EvalResult::summary_row() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-8s %-12s %6zu %10.2f %10.2f", split.c_str(),
                std::string(prompt_mode_name(prompt_mode)).c_str(), n, mae, rmse);
  return buf;
}

EvalResult summarize(std::string split, PromptMode mode, std::vector<EvalRecord> records) {
  std::vector<double> p, a;
  for (const auto& r : records) {
    p.push_back(r.predicted);
    a.push_back(r.actual);
  }
  EvalResult out;
  out.split = std::move(split);
  out.prompt_mode = mode;
  out.n = records.size();
  out.mae = mae(p, a);
  out.rmse = rmse(p, a);
  out.records = std::move(records);
  return out;
}

EvalResult evaluate_split(const infer::DensityPredictor& predictor, const data::DatasetIndex& index,
                          const std::string& split, PromptMode mode, const infer::InferenceConfig& config) {
  const auto& samples = index.split(split);
  std::vector<std::string> prompts;
  for (const auto& s : samples) prompts.push_back(prompt_for(s, mode));
  std::vector<EvalRecord> records;
  records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto result = infer::predict(predictor, io::read_image(s.image_path), prompts[i], config);
    EvalRecord r;
    r.filename = s.filename;
    r.prompt = prompts[i];
    r.predicted = result.count;
    r.actual = static_cast<double>(s.dots.size());
    r.abs_error = std::abs(r.predicted - r.actual);
    records.push_back(std::move(r));
  }
  auto out = summarize(split, mode, std::move(records));
  out.model_id = predictor.model_id();
  return out;
}

std::pair<double, double> mass_split(const Mat<double>& density, int boundary) {
  if (boundary < 0 || boundary > density.cols()) throw InputError("mass_split: boundary outside the map");
  const double left = density.leftCols(boundary).sum();
  const double right = density.rightCols(density.cols() - boundary).sum();
  const double total = left + right;
  if (!(total > 0.0)) return {0.5, 0.5};
  return {left / total, right / total};
}

nlohmann::json composite_probe(const infer::DensityPredictor& predictor, std::span<const CompositePair> pairs,
                               const std::filesystem::path& out_dir, const infer::InferenceConfig& config) {
  nlohmann::json manifest = nlohmann::json::array();
  if (pairs.empty()) return manifest;
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    const std::array<std::string, 2> prompts{pair.prompt_a, pair.prompt_b};
    const auto composite = infer::composite_predict(predictor, io::read_image(pair.image_a),
                                                    io::read_image(pair.image_b), prompts, config);
    nlohmann::json entry{{"image_a", pair.image_a.string()},
                         {"image_b", pair.image_b.string()},
                         {"boundary", composite.boundary},
                         {"prompts", nlohmann::json::array()}};
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& r = composite.results[k];
      const auto [left, right] = mass_split(r.density, composite.boundary);
      const auto overlay = out_dir / ("pair" + std::to_string(i) + (k == 0 ? "_a" : "_b") + ".png");
      infer::write_overlay_png(overlay, composite.image, r.density);
      const double matching = k == 0 ? left : right;
      entry["prompts"].push_back({{"prompt", r.prompt},
                                  {"matching_half", k == 0 ? "left" : "right"},
                                  {"count", r.count},
                                  {"mass_left", left},
                                  {"mass_right", right},
                                  {"mass_matching", matching},
                                  {"overlay", overlay.string()}});
    }
    manifest.push_back(std::move(entry));
  }
  return manifest;
}

}  // namespace countx::eval
