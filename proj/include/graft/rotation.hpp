// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/common.hpp"

namespace graft {

// Continuous 6D rotation parameterization: the first two columns of a
// rotation matrix, stored column after column.

/// Gram-Schmidt decode of a 6D vector into a proper rotation matrix.
/// Throws DegenerateRotation when a column is (near) zero or the two columns
/// are (near) parallel.
Mat3 rot6d_to_matrix(const Vec6& r);

/// First two columns of `R`.
Vec6 matrix_to_rot6d(const Mat3& R);

/// The 6D vector of the rotation that `r` decodes to.
inline Vec6 canonical_rot6d(const Vec6& r) { return matrix_to_rot6d(rot6d_to_matrix(r)); }

inline Vec6 identity_rot6d() {
  Vec6 r;
  r << 1, 0, 0, 0, 1, 0;
  return r;
}

Mat3 axis_angle_to_matrix(const Vec3& axis_angle);

// Parallel-column threshold on |cos| between the two 3-vectors.
inline constexpr double kRot6dParallelTolerance = 1e-8;
inline constexpr double kRot6dMinNorm = 1e-12;

}  // namespace graft
