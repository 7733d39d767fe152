// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace countx {

struct ModelConfig;

/// Fixed-length token ids: start marker, content, end marker, zero padding.
struct TokenSequence {
  std::vector<std::int32_t> ids;
  bool operator==(const TokenSequence&) const = default;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual TokenSequence encode(std::string_view text) const = 0;
  virtual int context_length() const = 0;
  virtual int vocab_size() const = 0;
};

/// Byte-pair tokenizer compatible with the CLIP text tower. Built from the
/// merges list shipped with the pretrained weights (plain text or .gz).
class ClipBpeTokenizer final : public Tokenizer {
 public:
  static ClipBpeTokenizer from_file(const std::filesystem::path& merges_path,
                                    int context_length = 77);
  /// `merges` are "a b" pairs in rank order; the vocabulary is derived from
  /// them exactly as the reference tokenizer does.
  ClipBpeTokenizer(const std::vector<std::string>& merges, int context_length);

  TokenSequence encode(std::string_view text) const override;
  int context_length() const override { return context_length_; }
  int vocab_size() const override { return static_cast<int>(encoder_.size()); }

  std::int32_t start_token() const { return sot_; }
  std::int32_t end_token() const { return eot_; }

  /// Content ids without markers or padding.
  std::vector<std::int32_t> encode_content(std::string_view text) const;

 private:
  std::vector<std::string> bpe(const std::string& token) const;

  int context_length_;
  std::map<unsigned char, std::string> byte_encoder_;
  std::unordered_map<std::string, std::int32_t> encoder_;
  std::unordered_map<std::string, int> merge_ranks_;
  std::int32_t sot_ = 0;
  std::int32_t eot_ = 0;
};

/// Vocabulary-free fallback: each byte of the lowercased, whitespace-collapsed
/// text maps to 1 + byte mod (vocab - 3); start/end markers are vocab-2 and
/// vocab-1. Used for toy models and when no merges file is supplied.
class ByteTokenizer final : public Tokenizer {
 public:
  ByteTokenizer(int vocab_size, int context_length);

  TokenSequence encode(std::string_view text) const override;
  int context_length() const override { return context_length_; }
  int vocab_size() const override { return vocab_size_; }

 private:
  int vocab_size_;
  int context_length_;
};

/// Normalizes whitespace (trim + collapse runs) and lowercases ASCII.
std::string clean_text(std::string_view text);

/// BPE tokenizer when `merges_path` is non-empty, byte tokenizer otherwise.
std::shared_ptr<const Tokenizer> make_tokenizer(const ModelConfig& config,
                                                const std::filesystem::path& merges_path = {});

}  // namespace countx
