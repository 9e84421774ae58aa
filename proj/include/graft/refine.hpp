// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/body_model.hpp"
#include "graft/probes.hpp"
#include "graft/scene.hpp"
#include "graft/transformer.hpp"
#include "graft/weights.hpp"

#include <vector>

namespace graft {

struct RefinementConfig {
  int iterations = 3;
  bool geometry_only = false;
  int max_points = 0;  // 0 keeps the full cloud; see build_index
  bool record_trajectory = true;
};

struct TrajectoryEntry {
  HumanState state;
  double mean_probe_distance = 0.0;  // mean NN distance over contact vertices (m)
  double scale = 1.0;                // scale predicted by the step that produced this state
  double wall_ms = 0.0;
};

struct RefinementResult {
  HumanState state;
  std::vector<TrajectoryEntry> trajectory;  // iterations + 1 entries when recorded
};

/// Everything a refinement step reads; all members are shared read-only.
struct RefinementContext {
  const BodyModel& model;
  const SpatialIndex& scene;
  const Weights& weights;
  const FeatureGrids* grids = nullptr;  // null selects geometry-only mode
};

struct StepOptions {
  bool geometry_only = false;
  // Tokens whose visual context is replaced by zeros (anchor dropout).
  const std::vector<bool>* dropped_context = nullptr;
  // Uniform scale of the scene about the camera origin (training augmentation).
  double scene_scale = 1.0;
};

struct StepResult {
  HumanState state;
  InteractionGradient update;
  TokenProbes probes;  // probes of the input state
};

/// One probe -> tokenize -> transformer -> decode -> apply pass.
StepResult refine_step(const RefinementContext& ctx, const HumanState& state, const StepOptions& options = {});

/// Refines every human independently; humans run in parallel.
std::vector<RefinementResult> refine(const RefinementContext& ctx, const std::vector<HumanState>& states,
                                     const RefinementConfig& config);

/// Index over the cloud, uniformly downsampled to config.max_points when set.
SpatialIndex build_index(const ScenePointCloud& cloud, const RefinementConfig& config);

double mean_contact_distance(const BodyModel& model, const PosedMesh& mesh, const SceneQuery& scene);

struct AlignResult {
  HumanState state;
  double scale = 1.0;
  Vec3 scene_point = Vec3::Zero();
};

/// Depth-ratio alignment: the head joint is projected, the first cloud point
/// along that pixel's ray (within `cone_degrees` of it) is looked up, and the
/// state is rescaled by z_scene / z_head through absorb_scale.
AlignResult metric_align(const BodyModel& model, const HumanState& state, const ScenePointCloud& cloud,
                         const CameraIntrinsics& intrinsics, double cone_degrees = 2.0);

}  // namespace graft
