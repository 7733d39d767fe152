// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace countx::io {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Accepts standard padding and an optional "data:<mime>;base64," prefix;
/// whitespace is skipped. Throws InputError on invalid input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace countx::io
