// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/text/tokenizer.hpp"

#include "countx/core/common.hpp"
#include "countx/model/config.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <climits>
#include <sstream>

namespace countx {

namespace {

std::string utf8_encode(std::uint32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

// Reversible byte -> printable code point table of the reference tokenizer,
// in vocabulary order.
std::vector<std::pair<unsigned char, std::uint32_t>> bytes_to_unicode() {
  std::vector<int> bs;
  for (int b = '!'; b <= '~'; ++b) bs.push_back(b);
  for (int b = 0xA1; b <= 0xAC; ++b) bs.push_back(b);
  for (int b = 0xAE; b <= 0xFF; ++b) bs.push_back(b);
  std::vector<std::uint32_t> cs(bs.begin(), bs.end());
  std::uint32_t n = 0;
  for (int b = 0; b < 256; ++b) {
    if (std::find(bs.begin(), bs.end(), b) == bs.end()) {
      bs.push_back(b);
      cs.push_back(256 + n++);
    }
  }
  std::vector<std::pair<unsigned char, std::uint32_t>> table;
  for (std::size_t i = 0; i < bs.size(); ++i)
    table.emplace_back(static_cast<unsigned char>(bs[i]), cs[i]);
  return table;
}

enum class CharClass { kSpace, kLetter, kDigit, kOther };

CharClass classify(unsigned char c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
    return CharClass::kSpace;
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80) return CharClass::kLetter;
  if (c >= '0' && c <= '9') return CharClass::kDigit;
  return CharClass::kOther;
}

// Pre-tokenizer: contractions, letter runs, single digits, runs of other
// non-space symbols. Non-ASCII bytes are treated as letters.
std::vector<std::string> split_words(const std::string& text) {
  static const char* const kContractions[] = {"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    const CharClass cls = classify(c);
    if (cls == CharClass::kSpace) {
      ++i;
      continue;
    }
    if (c == '\'') {
      bool matched = false;
      for (const char* con : kContractions) {
        const std::string_view cv(con);
        if (text.compare(i, cv.size(), cv) == 0) {
          words.emplace_back(cv);
          i += cv.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    std::size_t j = i + 1;
    if (cls == CharClass::kLetter) {
      while (j < text.size() && classify(static_cast<unsigned char>(text[j])) == CharClass::kLetter) ++j;
    } else if (cls == CharClass::kOther) {
      while (j < text.size() && classify(static_cast<unsigned char>(text[j])) == CharClass::kOther) ++j;
    }
    words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::string read_text_file(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw LoadError("tokenizer: cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  gzclose(f);
  if (n < 0) throw LoadError("tokenizer: read error in " + path.string());
  return out;
}

TokenSequence pack(std::vector<std::int32_t> content, std::int32_t sot, std::int32_t eot,
                   int context_length) {
  const auto room = static_cast<std::size_t>(context_length - 2);
  if (content.size() > room) content.resize(room);
  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(context_length), 0);
  seq.ids[0] = sot;
  std::copy(content.begin(), content.end(), seq.ids.begin() + 1);
  seq.ids[content.size() + 1] = eot;
  return seq;
}

}  // namespace

std::string clean_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (classify(c) == CharClass::kSpace) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

ClipBpeTokenizer ClipBpeTokenizer::from_file(const std::filesystem::path& merges_path,
                                             int context_length) {
  const std::string data = read_text_file(merges_path);
  std::istringstream is(data);
  std::string line;
  std::vector<std::string> merges;
  std::getline(is, line);  // version header
  // The reference vocabulary keeps 49152 - 256 - 2 merges.
  constexpr std::size_t kMaxMerges = 49152 - 256 - 2;
  while (merges.size() < kMaxMerges && std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    merges.push_back(line);
  }
  return ClipBpeTokenizer(merges, context_length);
}

ClipBpeTokenizer::ClipBpeTokenizer(const std::vector<std::string>& merges, int context_length)
    : context_length_(context_length) {
  if (context_length < 2) throw ConfigError("tokenizer: context_length must be >= 2");
  std::vector<std::string> vocab;
  for (const auto& [byte, cp] : bytes_to_unicode()) {
    byte_encoder_[byte] = utf8_encode(cp);
    vocab.push_back(utf8_encode(cp));
  }
  const std::size_t base = vocab.size();
  for (std::size_t i = 0; i < base; ++i) vocab.push_back(vocab[i] + "</w>");
  int rank = 0;
  for (const auto& m : merges) {
    const auto sp = m.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= m.size())
      throw LoadError("tokenizer: malformed merge line '" + m + "'");
    merge_ranks_.emplace(m, rank++);
    vocab.push_back(m.substr(0, sp) + m.substr(sp + 1));
  }
  vocab.emplace_back("<|startoftext|>");
  vocab.emplace_back("<|endoftext|>");
  for (std::size_t i = 0; i < vocab.size(); ++i)
    encoder_[vocab[i]] = static_cast<std::int32_t>(i);
  sot_ = encoder_.at("<|startoftext|>");
  eot_ = encoder_.at("<|endoftext|>");
}

std::vector<std::string> ClipBpeTokenizer::bpe(const std::string& token) const {
  // token is a sequence of UTF-8 encoded symbols; split into code points.
  std::vector<std::string> word;
  for (std::size_t i = 0; i < token.size();) {
    const auto c = static_cast<unsigned char>(token[i]);
    const std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    word.push_back(token.substr(i, len));
    i += len;
  }
  if (word.empty()) return word;
  word.back() += "</w>";
  while (word.size() > 1) {
    int best_rank = INT_MAX;
    std::size_t best = 0;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      const auto it = merge_ranks_.find(word[i] + " " + word[i + 1]);
      if (it != merge_ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best = i;
      }
    }
    if (best_rank == INT_MAX) break;
    const std::string first = word[best];
    const std::string second = word[best + 1];
    std::vector<std::string> merged;
    for (std::size_t i = 0; i < word.size();) {
      if (i + 1 < word.size() && word[i] == first && word[i + 1] == second) {
        merged.push_back(first + second);
        i += 2;
      } else {
        merged.push_back(word[i]);
        ++i;
      }
    }
    word = std::move(merged);
  }
  return word;
}

std::vector<std::int32_t> ClipBpeTokenizer::encode_content(std::string_view text) const {
  std::vector<std::int32_t> ids;
  for (const auto& w : split_words(clean_text(text))) {
    std::string mapped;
    for (char ch : w) mapped += byte_encoder_.at(static_cast<unsigned char>(ch));
    for (const auto& piece : bpe(mapped)) {
      const auto it = encoder_.find(piece);
      if (it == encoder_.end()) throw InputError("tokenizer: unknown piece '" + piece + "'");
      ids.push_back(it->second);
    }
  }
  return ids;
}

TokenSequence ClipBpeTokenizer::encode(std::string_view text) const {
  return pack(encode_content(text), sot_, eot_, context_length_);
}

ByteTokenizer::ByteTokenizer(int vocab_size, int context_length)
    : vocab_size_(vocab_size), context_length_(context_length) {
  if (vocab_size < 4) throw ConfigError("byte tokenizer: vocab_size must be >= 4");
  if (context_length < 2) throw ConfigError("byte tokenizer: context_length must be >= 2");
}

TokenSequence ByteTokenizer::encode(std::string_view text) const {
  std::vector<std::int32_t> content;
  const int span = vocab_size_ - 3;
  for (char ch : clean_text(text))
    content.push_back(1 + static_cast<std::int32_t>(static_cast<unsigned char>(ch) % span));
  return pack(std::move(content), vocab_size_ - 2, vocab_size_ - 1, context_length_);
}

std::shared_ptr<const Tokenizer> make_tokenizer(const ModelConfig& config,
                                                const std::filesystem::path& merges_path) {
  if (merges_path.empty())
    return std::make_shared<ByteTokenizer>(config.vocab_size, config.context_length);
  auto bpe = std::make_shared<ClipBpeTokenizer>(
      ClipBpeTokenizer::from_file(merges_path, config.context_length));
  if (bpe->vocab_size() != config.vocab_size)
    throw ConfigError("tokenizer: merges file yields vocab " + std::to_string(bpe->vocab_size()) +
                      " but model expects " + std::to_string(config.vocab_size));
  return bpe;
}

}  // namespace countx
