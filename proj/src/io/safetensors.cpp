// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/io/safetensors.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace countx::io {

namespace {

static_assert(std::endian::native == std::endian::little, "safetensors IO assumes little endian");

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "F16" || dtype == "BF16") return 2;
  if (dtype == "F32") return 4;
  if (dtype == "F64") return 8;
  throw LoadError("safetensors: unsupported dtype " + dtype);
}

float half_to_float(std::uint16_t h) {
  const std::uint32_t sign = (h >> 15) & 1u;
  const std::uint32_t exp = (h >> 10) & 0x1fu;
  const std::uint32_t mant = h & 0x3ffu;
  float value;
  if (exp == 0) {
    value = std::ldexp(static_cast<float>(mant), -24);
  } else if (exp == 31) {
    value = mant ? std::numeric_limits<float>::quiet_NaN() : std::numeric_limits<float>::infinity();
  } else {
    value = std::ldexp(static_cast<float>(mant | 0x400u), static_cast<int>(exp) - 25);
  }
  return sign ? -value : value;
}

float bf16_to_float(std::uint16_t h) {
  return std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16);
}

template <typename T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

std::int64_t TensorRecord::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

TensorArchive read_safetensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  if (file_size < 8) throw LoadError(path.string() + ": truncated header");
  std::uint64_t header_size = 0;
  in.read(reinterpret_cast<char*>(&header_size), 8);
  if (header_size == 0 || header_size > file_size - 8)
    throw LoadError(path.string() + ": invalid header size");
  std::string header(header_size, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_size));
  const std::uint64_t buffer_size = file_size - 8 - header_size;
  std::vector<std::uint8_t> buffer(buffer_size);
  in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer_size));
  if (!in) throw LoadError(path.string() + ": short read");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": corrupt header (" + e.what() + ")");
  }
  if (!j.is_object()) throw LoadError(path.string() + ": header is not an object");

  TensorArchive archive;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "__metadata__") {
      for (auto m = it->begin(); m != it->end(); ++m)
        archive.metadata[m.key()] = m->get<std::string>();
      continue;
    }
    try {
      TensorRecord rec;
      rec.dtype = it->at("dtype").get<std::string>();
      rec.shape = it->at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = it->at("data_offsets").get<std::vector<std::uint64_t>>();
      if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > buffer_size)
        throw LoadError(path.string() + ": tensor '" + it.key() + "' has invalid offsets");
      const std::uint64_t expected =
          static_cast<std::uint64_t>(rec.element_count()) * dtype_size(rec.dtype);
      if (offsets[1] - offsets[0] != expected)
        throw LoadError(path.string() + ": tensor '" + it.key() + "' size does not match shape");
      rec.bytes.assign(buffer.begin() + static_cast<std::ptrdiff_t>(offsets[0]),
                       buffer.begin() + static_cast<std::ptrdiff_t>(offsets[1]));
      archive.tensors.emplace(it.key(), std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(path.string() + ": malformed entry '" + it.key() + "' (" + e.what() + ")");
    }
  }
  return archive;
}

void write_safetensors(const std::filesystem::path& path, const TensorArchive& archive) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, rec] : archive.tensors) {
    header[name] = {{"dtype", rec.dtype},
                    {"shape", rec.shape},
                    {"data_offsets", {offset, offset + rec.bytes.size()}}};
    offset += rec.bytes.size();
  }
  if (!archive.metadata.empty()) header["__metadata__"] = archive.metadata;
  std::string text = header.dump();
  while (text.size() % 8 != 0) text.push_back(' ');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  const std::uint64_t header_size = text.size();
  out.write(reinterpret_cast<const char*>(&header_size), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, rec] : archive.tensors)
    out.write(reinterpret_cast<const char*>(rec.bytes.data()),
              static_cast<std::streamsize>(rec.bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::uint64_t payload_digest(const TensorArchive& archive) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const std::uint8_t* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& [name, rec] : archive.tensors) {
    mix(reinterpret_cast<const std::uint8_t*>(name.data()), name.size());
    mix(rec.bytes.data(), rec.bytes.size());
  }
  return h;
}

template <typename Scalar>
TensorRecord to_record(const Mat<Scalar>& m, std::vector<std::int64_t> shape) {
  TensorRecord rec;
  rec.dtype = std::is_same_v<Scalar, float> ? "F32" : "F64";
  rec.shape = shape.empty() ? std::vector<std::int64_t>{m.rows(), m.cols()} : std::move(shape);
  if (rec.element_count() != m.size()) throw ConfigError("to_record: shape does not match matrix");
  const auto* p = reinterpret_cast<const std::uint8_t*>(m.data());
  rec.bytes.assign(p, p + sizeof(Scalar) * static_cast<std::size_t>(m.size()));
  return rec;
}

template <typename Scalar>
Mat<Scalar> to_matrix(const TensorRecord& rec, Eigen::Index rows, Eigen::Index cols) {
  if (rec.element_count() != rows * cols)
    throw ConfigError("tensor has " + std::to_string(rec.element_count()) + " elements, expected " +
                      std::to_string(rows * cols));
  Mat<Scalar> m(rows, cols);
  const std::uint8_t* p = rec.bytes.data();
  const Eigen::Index n = m.size();
  if (rec.dtype == "F32") {
    for (Eigen::Index i = 0; i < n; ++i) m.data()[i] = static_cast<Scalar>(load<float>(p + 4 * i));
  } else if (rec.dtype == "F64") {
    for (Eigen::Index i = 0; i < n; ++i) m.data()[i] = static_cast<Scalar>(load<double>(p + 8 * i));
  } else if (rec.dtype == "F16") {
    for (Eigen::Index i = 0; i < n; ++i)
      m.data()[i] = static_cast<Scalar>(half_to_float(load<std::uint16_t>(p + 2 * i)));
  } else if (rec.dtype == "BF16") {
    for (Eigen::Index i = 0; i < n; ++i)
      m.data()[i] = static_cast<Scalar>(bf16_to_float(load<std::uint16_t>(p + 2 * i)));
  } else {
    throw LoadError("unsupported dtype " + rec.dtype);
  }
  return m;
}

template TensorRecord to_record<float>(const Mat<float>&, std::vector<std::int64_t>);
template TensorRecord to_record<double>(const Mat<double>&, std::vector<std::int64_t>);
template Mat<float> to_matrix<float>(const TensorRecord&, Eigen::Index, Eigen::Index);
template Mat<double> to_matrix<double>(const TensorRecord&, Eigen::Index, Eigen::Index);

}  // namespace countx::io
