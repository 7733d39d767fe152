// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/io/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <jpeglib.h>

namespace countx::io {

namespace {

constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint8_t to_byte(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<std::uint8_t>(c * 255.0f + 0.5f);
}

RgbImage from_interleaved(const std::uint8_t* px, int width, int height) {
  RgbImage im(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* p = px + (static_cast<std::size_t>(y) * width + x) * 3;
      for (int c = 0; c < 3; ++c) im.at(c, y, x) = static_cast<float>(p[c]) / 255.0f;
    }
  return im;
}

std::vector<std::uint8_t> to_interleaved(const RgbImage& im) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(im.width) * im.height * 3);
  for (int y = 0; y < im.height; ++y)
    for (int x = 0; x < im.width; ++x) {
      std::uint8_t* p = px.data() + (static_cast<std::size_t>(y) * im.width + x) * 3;
      for (int c = 0; c < 3; ++c) p[c] = to_byte(im.at(c, y, x));
    }
  return px;
}

// -- PNG ----------------------------------------------------------------------

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw InputError(std::string("png: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw InputError("png: " + msg);
  }
  return from_interleaved(px.data(), static_cast<int>(image.width), static_cast<int>(image.height));
}

// -- JPEG ---------------------------------------------------------------------

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr, int) {}

// No objects with destructors live in this frame across setjmp.
bool jpeg_decode_raw(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>& px, int& width,
                     int& height, bool header_only, char* message) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  err.mgr.emit_message = jpeg_silence;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  width = static_cast<int>(cinfo.image_width);
  height = static_cast<int>(cinfo.image_height);
  if (header_only) {
    jpeg_destroy_decompress(&cinfo);
    return true;
  }
  if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
    std::strncpy(message, "CMYK images are not supported", JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  px.resize(stride * cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = px.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> px;
  int w = 0, h = 0;
  char message[JMSG_LENGTH_MAX] = {};
  if (!jpeg_decode_raw(bytes, px, w, h, false, message)) throw InputError(std::string("jpeg: ") + message);
  return from_interleaved(px.data(), w, h);
}

bool jpeg_encode_raw(const std::vector<std::uint8_t>& px, int width, int height, int quality,
                     unsigned char** out, unsigned long* out_size, char* message) {
  jpeg_compress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, out, out_size);
  cinfo.image_width = static_cast<JDIMENSION>(width);
  cinfo.image_height = static_cast<JDIMENSION>(height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<std::uint8_t*>(px.data()) + stride * cinfo.next_scanline;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

}  // namespace

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0) return ImageFormat::kPng;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
    return ImageFormat::kJpeg;
  return ImageFormat::kUnknown;
}

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  switch (sniff_format(bytes)) {
    case ImageFormat::kPng: return decode_png(bytes);
    case ImageFormat::kJpeg: return decode_jpeg(bytes);
    case ImageFormat::kUnknown: break;
  }
  throw InputError("unsupported image format (expected PNG or JPEG)");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError("write failed for " + path.string());
}

RgbImage read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

ImageInfo probe_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  // Enough for headers behind typical EXIF blocks; falls back to the whole file.
  std::vector<std::uint8_t> head(1 << 16);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  ImageInfo info;
  info.format = sniff_format(head);
  if (info.format == ImageFormat::kPng) {
    if (head.size() < 24) throw InputError(path.string() + ": truncated png");
    const auto be32 = [&](std::size_t o) {
      return static_cast<int>((head[o] << 24) | (head[o + 1] << 16) | (head[o + 2] << 8) | head[o + 3]);
    };
    info.width = be32(16);
    info.height = be32(20);
    return info;
  }
  if (info.format == ImageFormat::kJpeg) {
    std::vector<std::uint8_t> px;
    char message[JMSG_LENGTH_MAX] = {};
    if (!jpeg_decode_raw(head, px, info.width, info.height, true, message)) {
      const auto full = read_file(path);
      if (!jpeg_decode_raw(full, px, info.width, info.height, true, message))
        throw InputError(path.string() + ": jpeg: " + message);
    }
    return info;
  }
  throw InputError(path.string() + ": unsupported image format");
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  if (image.empty()) throw InputError("png: empty image");
  const auto px = to_interleaved(image);
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.width);
  out.height = static_cast<png_uint_32>(image.height);
  out.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&out, nullptr, &size, 0, px.data(), 0, nullptr))
    throw InputError(std::string("png: ") + out.message);
  std::vector<std::uint8_t> bytes(size);
  if (!png_image_write_to_memory(&out, bytes.data(), &size, 0, px.data(), 0, nullptr))
    throw InputError(std::string("png: ") + out.message);
  bytes.resize(size);
  return bytes;
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality) {
  if (image.empty()) throw InputError("jpeg: empty image");
  const auto px = to_interleaved(image);
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  char message[JMSG_LENGTH_MAX] = {};
  const bool ok = jpeg_encode_raw(px, image.width, image.height, quality, &buffer, &size, message);
  std::vector<std::uint8_t> bytes;
  if (ok) bytes.assign(buffer, buffer + size);
  std::free(buffer);
  if (!ok) throw InputError(std::string("jpeg: ") + message);
  return bytes;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_file(path, encode_png(image));
}

void write_jpeg(const std::filesystem::path& path, const RgbImage& image, int quality) {
  write_file(path, encode_jpeg(image, quality));
}

}  // namespace countx::io
