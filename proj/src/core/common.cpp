// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#include "countx/core/common.hpp"

#include <sstream>

namespace countx {

Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * keys.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto k : keys) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

namespace {
std::string join_offenders(const std::string& what, const std::vector<std::string>& offenders) {
  std::ostringstream os;
  os << what;
  const std::size_t shown = std::min<std::size_t>(offenders.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) os << (i == 0 ? ": " : ", ") << offenders[i];
  if (offenders.size() > shown) os << " (+" << offenders.size() - shown << " more)";
  return os.str();
}
}  // namespace

ValidationError::ValidationError(const std::string& what, std::vector<std::string> offenders)
    : Error(join_offenders(what, offenders)), offenders_(std::move(offenders)) {}

}  // namespace countx
