// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/core/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace countx::io {

/// One tensor of a safetensors archive: little-endian raw bytes plus dtype
/// tag ("F16", "BF16", "F32" or "F64") and shape.
struct TensorRecord {
  std::string dtype;
  std::vector<std::int64_t> shape;
  std::vector<std::uint8_t> bytes;

  std::int64_t element_count() const;
};

struct TensorArchive {
  std::map<std::string, TensorRecord> tensors;
  std::map<std::string, std::string> metadata;
};

/// Reads an archive; throws LoadError on truncation or inconsistent offsets.
TensorArchive read_safetensors(const std::filesystem::path& path);
void write_safetensors(const std::filesystem::path& path, const TensorArchive& archive);

/// FNV-1a over tensor names and payloads in name order.
std::uint64_t payload_digest(const TensorArchive& archive);

template <typename Scalar>
TensorRecord to_record(const Mat<Scalar>& m, std::vector<std::int64_t> shape = {});

/// Decodes to a rows x cols matrix with dtype conversion. Throws ConfigError
/// when the element count differs.
template <typename Scalar>
Mat<Scalar> to_matrix(const TensorRecord& record, Eigen::Index rows, Eigen::Index cols);

}  // namespace countx::io
