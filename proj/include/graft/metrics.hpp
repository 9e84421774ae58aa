// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/body_model.hpp"
#include "graft/scene.hpp"

#include <vector>

namespace graft {

inline constexpr double kDefaultContactTau = 0.05;

/// Per contact vertex: nearest scene distance < tau.
std::vector<bool> contact_labels(const BodyModel& model, const PosedMesh& mesh, const SceneQuery& scene, double tau);

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no predicted positives
  bool recall_undefined = false;     // no ground-truth positives
};

PrfResult contact_prf(const std::vector<bool>& predicted, const std::vector<bool>& ground_truth);

/// Per contact vertex: nearest scene point minus vertex.
Points3 contact_displacements(const BodyModel& model, const PosedMesh& mesh, const SceneQuery& scene);

/// Weighted mean of |d_pred - d_gt|, in millimetres.
double v2s_mm(const Points3& d_pred, const Points3& d_gt, const VecX& weights);

/// Weighted mean angle between d_pred and d_gt in degrees; rows where either
/// vector is shorter than 1e-9 are dropped. Throws AllDegenerate when none remain.
double d2s_deg(const Points3& d_pred, const Points3& d_gt, const VecX& weights);

/// Mean joint error after the optimal similarity alignment of `predicted`
/// onto `ground_truth`, in millimetres.
double pa_mpjpe_mm(const Points3& predicted, const Points3& ground_truth);

struct EvalReport {
  double tau = kDefaultContactTau;
  PrfResult prf;
  double v2s_mm = 0.0;
  double d2s_deg = 0.0;
  bool d2s_defined = true;
  double pa_mpjpe_mm = 0.0;
};

/// Metrics of one predicted human against its ground truth. Each state is
/// measured against its own scene.
EvalReport evaluate(const BodyModel& model, const HumanState& predicted, const SceneQuery& predicted_scene,
                    const HumanState& ground_truth, const SceneQuery& ground_truth_scene, double tau);

/// Contact-vertex area weights.
VecX contact_weights(const BodyModel& model);

/// The 22 root + body joints of a posed mesh, in state slot order.
Points3 body_joints(const BodyModel& model, const PosedMesh& mesh);

}  // namespace graft
