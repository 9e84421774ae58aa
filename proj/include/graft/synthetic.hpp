// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/body_model.hpp"
#include "graft/probes.hpp"
#include "graft/scene.hpp"
#include "graft/training.hpp"

namespace graft {

struct ToyModelOptions {
  // When set, blendshape 0 is 0.1 T so the template lies in the blendshape
  // span and absorb_scale is an exact uniform scaling.
  bool template_in_shape_span = true;
  uint64_t seed = 0;
};

/// A 165-vertex tube humanoid with the 52-joint body + hands layout, feet on
/// y = 0, Y up and facing +z.
BodyModel make_toy_model(const ToyModelOptions& options = {});

CameraIntrinsics default_intrinsics();

enum class Placement { Standing, Seated };

struct ScenarioOptions {
  uint64_t seed = 0;
  double difficulty = 1.0;  // multiplier on the perturbation spec; 0 gives init == gt
  Placement placement = Placement::Standing;
  bool wall = true;
};

struct SyntheticScenario {
  BodyModel model;
  ScenePointCloud scene;
  CameraIntrinsics intrinsics;
  HumanState gt;
  HumanState init;
};

SyntheticScenario synthesize_scenario(const ScenarioOptions& options);

// Camera frame: y points down, the floor is the plane y = kFloorY.
inline constexpr double kFloorY = 1.3;

/// Grid of points on the plane y = height with normals facing the camera.
Points3 floor_points(double height, double x_min, double x_max, double z_min, double z_max, double spacing);

/// Floor plus optional back wall.
ScenePointCloud make_room(bool wall);

/// Standing toy pose with the feet on the floor, root at lateral offset `x`
/// and depth `depth`, turned by `yaw` radians about the vertical axis.
HumanState standing_state(const BodyModel& model, double x, double depth, double yaw);

/// Knees and hips bent 90 degrees; feet on the floor.
HumanState seated_state(const BodyModel& model, double x, double depth);

/// Random feature maps covering the image at the given patch size.
FeatureGrids random_feature_grids(const ArchConfig& arch, const CameraIntrinsics& intrinsics, double patch_size,
                                  uint64_t seed);

}  // namespace graft
