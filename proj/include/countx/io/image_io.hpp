// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include "countx/image/rgb_image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace countx::io {

enum class ImageFormat { kUnknown, kPng, kJpeg };

struct ImageInfo {
  int width = 0;
  int height = 0;
  ImageFormat format = ImageFormat::kUnknown;
};

/// Identifies PNG or JPEG from the leading magic bytes.
ImageFormat sniff_format(std::span<const std::uint8_t> bytes);

/// Decodes PNG or JPEG (gray, RGB or RGBA; alpha is dropped). Throws
/// InputError for unsupported or malformed data.
RgbImage decode_image(std::span<const std::uint8_t> bytes);
/// Throws LoadError when the file cannot be read.
RgbImage read_image(const std::filesystem::path& path);
/// Reads only the header.
ImageInfo probe_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality = 92);
void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_jpeg(const std::filesystem::path& path, const RgbImage& image, int quality = 92);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace countx::io
