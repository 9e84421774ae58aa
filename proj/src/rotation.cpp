// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/rotation.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace graft {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateRotation: return "DegenerateRotation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::RankDeficientBlendshapes: return "RankDeficientBlendshapes";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::WeightShapeMismatch: return "WeightShapeMismatch";
    case ErrorCode::GridShapeMismatch: return "GridShapeMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::HeadNotVisible: return "HeadNotVisible";
    case ErrorCode::NoScenePointOnRay: return "NoScenePointOnRay";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingTensor: return "MissingTensor";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

double Rng::normal() {
  // 1 - uniform() lies in (0, 1], keeping the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Vec3 Rng::unit_vector() {
  for (;;) {
    Vec3 v(normal(), normal(), normal());
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Mat3 rot6d_to_matrix(const Vec6& r) {
  const Vec3 a1 = r.head<3>();
  const Vec3 a2 = r.tail<3>();
  const double n1 = a1.norm();
  const double n2 = a2.norm();
  if (!(n1 > kRot6dMinNorm) || !(n2 > kRot6dMinNorm)) {
    fail(ErrorCode::DegenerateRotation, "6D rotation has a zero-length column");
  }
  const Vec3 b1 = a1 / n1;
  const double cosine = b1.dot(a2) / n2;
  if (!(std::abs(cosine) < 1.0 - kRot6dParallelTolerance)) {
    fail(ErrorCode::DegenerateRotation, "6D rotation columns are parallel");
  }
  Vec3 b2 = (a2 - b1.dot(a2) * b1).normalized();
  // Second projection pass; near-parallel inputs lose orthogonality to
  // cancellation in the first.
  b2 = (b2 - b1.dot(b2) * b1).normalized();
  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b1.cross(b2);
  return R;
}

Vec6 matrix_to_rot6d(const Mat3& R) {
  Vec6 r;
  r.head<3>() = R.col(0);
  r.tail<3>() = R.col(1);
  return r;
}

Mat3 axis_angle_to_matrix(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

}  // namespace graft
