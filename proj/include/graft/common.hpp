// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace graft {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// N x 3 point sets, one point per row.
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

enum class ErrorCode {
  DegenerateRotation,
  DimensionMismatch,
  NonPositiveScale,
  RankDeficientBlendshapes,
  InvalidModel,
  EmptyCloud,
  TooFewPoints,
  WeightShapeMismatch,
  GridShapeMismatch,
  ShapeMismatch,
  HeadNotVisible,
  NoScenePointOnRay,
  LengthMismatch,
  AllDegenerate,
  DegenerateConfiguration,
  NonFiniteLoss,
  MissingTensor,
  FormatError,
  IoError,
  UsageError,
};

std::string_view error_code_name(ErrorCode code);

/// Library-wide exception; `code()` is the machine-readable variant name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

/// Seeded generator whose draws are reproducible across standard libraries.
///
/// std::normal_distribution and friends are implementation-defined, so the
/// distributions are derived here from the raw mt19937_64 stream, whose
/// output sequence is fixed by the standard.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; no cached second value so the stream
  /// position only depends on the number of calls.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  Vec3 unit_vector();

 private:
  std::mt19937_64 engine_;
};

}  // namespace graft
