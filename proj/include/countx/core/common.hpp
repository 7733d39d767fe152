// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The countx Authors

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace countx {

/// Row-major dense matrix. Token sequences are stored one token per row and
/// feature maps one channel per row (row length H*W).
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Rng = std::mt19937_64;

/// Derives an independent stream from a global seed and a tuple of indices
/// (epoch, sample index, ...).
Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent configuration or wrong architecture for given weights.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input to an operation (wrong shape, empty prompt, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or corrupt file.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Dataset integrity violation. Carries every offender found.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> offenders);
  const std::vector<std::string>& offenders() const noexcept { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

}  // namespace countx
