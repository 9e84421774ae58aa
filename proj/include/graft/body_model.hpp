// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/common.hpp"
#include "graft/tensor_container.hpp"

#include <array>
#include <utility>
#include <vector>

namespace graft {

inline constexpr int kBodyJoints = 21;
inline constexpr int kHandJoints = 15;
/// Rotation slots carried by a HumanState: global + body + two hands.
inline constexpr int kStateJoints = 1 + kBodyJoints + 2 * kHandJoints;
inline constexpr int kShapeDim = 10;
inline constexpr int kSurfaceProbes = 27;

inline constexpr int kLeftHandSlot = 1 + kBodyJoints;
inline constexpr int kRightHandSlot = kLeftHandSlot + kHandJoints;

using ShapeVec = Eigen::Matrix<double, kShapeDim, 1>;

/// Parameters of one person. Rotation slot 0 is the global orientation,
/// slots 1..21 the body joints, 22..36 the left hand and 37..51 the right hand.
struct HumanState {
  std::array<Vec6, kStateJoints> rotations;
  Vec3 translation = Vec3::Zero();
  ShapeVec shape = ShapeVec::Zero();

  static HumanState identity();

  Vec6& global_orient() { return rotations[0]; }
  const Vec6& global_orient() const { return rotations[0]; }
  Vec6& body_pose(int i) { return rotations[1 + i]; }
  const Vec6& body_pose(int i) const { return rotations[1 + i]; }
  Vec6& left_hand(int i) { return rotations[kLeftHandSlot + i]; }
  const Vec6& left_hand(int i) const { return rotations[kLeftHandSlot + i]; }
  Vec6& right_hand(int i) { return rotations[kRightHandSlot + i]; }
  const Vec6& right_hand(int i) const { return rotations[kRightHandSlot + i]; }

  bool operator==(const HumanState& other) const;
};

struct PosedMesh {
  Points3 vertices;  // camera frame
  Points3 joints;    // camera frame
  std::vector<Mat3> joint_rotations;  // world rotation of every joint
};

/// Shape blendshapes plus linear blend skinning over a joint tree.
///
/// Construct the raw fields, then call finalize(), which validates the
/// invariants and derives vertex areas (when absent), the template offset and
/// the sparse skinning table. The model is immutable afterwards.
struct BodyModel {
  Points3 template_vertices;            // V x 3
  RowMatrix shape_dirs;                 // 10 x 3V, row k = blendshape k flattened xyz
  RowMatrix joint_regressor;            // J x V
  std::vector<int> parents;             // parents[0] == -1
  RowMatrix skin_weights;               // V x J
  std::vector<std::array<int, 3>> faces;
  std::vector<int> contact_vertex_ids;
  std::vector<int> surface_probe_ids;
  VecX vertex_areas;                    // empty until finalize() when not supplied
  // Model joint driven by each HumanState rotation slot; unmapped model joints
  // stay at identity.
  std::vector<int> state_joint_map;
  int head_joint = 15;

  // Derived by finalize().
  ShapeVec template_offset = ShapeVec::Zero();
  std::vector<std::vector<std::pair<int, double>>> skin_table;
  std::vector<int> joint_order;  // parents before children

  int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
  int num_joints() const { return static_cast<int>(parents.size()); }

  void finalize();

  /// Model joints of the hand chain rooted at `first_slot` that have no
  /// children, in slot order.
  std::vector<int> distal_joints(int first_slot) const;

  TensorContainer to_container() const;
  static BodyModel from_container(const TensorContainer& container);
};

/// T + sum_k beta_k S_k.
Points3 shaped_vertices(const BodyModel& model, const ShapeVec& shape);

PosedMesh forward(const BodyModel& model, const HumanState& state);

/// Folds a uniform scale about the camera origin into (shape, translation):
/// shape' = s (shape + c) - c, translation' = s translation.
HumanState absorb_scale(const HumanState& state, double scale, const BodyModel& model);

/// Least-squares coordinates of the template in blendshape space,
/// c = (S S^T)^-1 S T.
ShapeVec compute_template_offset(const Points3& template_vertices, const RowMatrix& shape_dirs);

/// Mixed Voronoi area per vertex (obtuse triangles split by half/quarter).
VecX mixed_voronoi_areas(const Points3& vertices, const std::vector<std::array<int, 3>>& faces);

/// Deterministic farthest-point sampling seeded at the vertex closest to the
/// centroid.
std::vector<int> farthest_point_sample(const Points3& vertices, int count);

}  // namespace graft
