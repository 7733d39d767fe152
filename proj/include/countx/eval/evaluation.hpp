// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/dataset/fsc147.hpp"
#include "countx/infer/sliding_window.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>

namespace countx::eval {

/// Mean absolute error. Throws InputError on empty or unequal inputs.
double mae(std::span<const double> predicted, std::span<const double> actual);
/// Root mean squared error, same contract as mae().
double rmse(std::span<const double> predicted, std::span<const double> actual);

enum class PromptMode { kClassName, kDescription };

std::string_view prompt_mode_name(PromptMode mode);
/// Accepts "class-name" and "description".
PromptMode parse_prompt_mode(std::string_view name);

/// Prompt for a record under a mode; InputError naming the record when the
/// source is empty.
std::string prompt_for(const data::SampleRecord& record, PromptMode mode);

struct EvalRecord {
  std::string filename;
  std::string prompt;
  double predicted = 0.0;
  double actual = 0.0;
  double abs_error = 0.0;
};

struct EvalResult {
  std::string split;
  PromptMode prompt_mode = PromptMode::kDescription;
  std::string model_id;
  std::size_t n = 0;
  double mae = 0.0;
  double rmse = 0.0;
  std::vector<EvalRecord> records;

  nlohmann::json to_json() const;
  /// One row in the benchmark-table layout: split, prompt, N, MAE, RMSE.
  std::string summary_row() const;
};

/// Header line matching summary_row().
std::string summary_header();

/// Aggregates records into an EvalResult.
EvalResult summarize(std::string split, PromptMode mode, std::vector<EvalRecord> records);

/// Runs sliding-window inference over every sample of `split`.
EvalResult evaluate_split(const infer::DensityPredictor& predictor, const data::DatasetIndex& index,
                          const std::string& split, PromptMode mode, const infer::InferenceConfig& config = {});

struct CompositePair {
  std::filesystem::path image_a;
  std::filesystem::path image_b;
  std::string prompt_a;
  std::string prompt_b;
};

/// Stitches each pair side by side, predicts with both prompts, writes one
/// overlay PNG per prompt into `out_dir`, and returns a manifest with the
/// fraction of predicted mass left and right of the seam.
nlohmann::json composite_probe(const infer::DensityPredictor& predictor, std::span<const CompositePair> pairs,
                               const std::filesystem::path& out_dir, const infer::InferenceConfig& config = {});

/// Mass fractions of `density` on columns [0, boundary) and [boundary, W).
/// An all-zero map splits evenly.
std::pair<double, double> mass_split(const Mat<double>& density, int boundary);

}  // namespace countx::eval
