// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

namespace countx::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point for the `countx` executable. Returns 0 on success, 1 on
/// validation or runtime failure, 2 on usage errors (help goes to stderr).
int run(int argc, char** argv);

}  // namespace countx::cli
