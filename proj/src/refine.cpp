// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/refine.hpp"

#include "graft/parallel.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace graft {

StepResult refine_step(const RefinementContext& ctx, const HumanState& state, const StepOptions& options) {
  const PosedMesh mesh = forward(ctx.model, state);
  const SceneQuery query(ctx.scene, options.scene_scale);
  StepResult out;
  out.probes = compute_probes(ctx.model, mesh, query);
  const RowMatrix tokens = tokenize(ctx.weights, state, out.probes);

  RowMatrix refined;
  if (ctx.grids && !options.geometry_only) {
    std::vector<RowMatrix> context = sample_context(ctx.weights, *ctx.grids, out.probes);
    if (options.dropped_context) {
      for (int k = 0; k < kNumTokens; ++k) {
        if ((*options.dropped_context)[k]) context[k].setZero();
      }
    }
    refined = transformer_forward(ctx.weights, tokens, &context);
  } else {
    refined = transformer_forward(ctx.weights, tokens, nullptr);
  }
  out.update = decode(ctx.weights, refined);
  out.state = apply_update(state, out.update, ctx.model);
  return out;
}

double mean_contact_distance(const BodyModel& model, const PosedMesh& mesh, const SceneQuery& scene) {
  if (model.contact_vertex_ids.empty()) return 0.0;
  double sum = 0.0;
  for (int v : model.contact_vertex_ids) sum += scene.nearest(mesh.vertices.row(v).transpose()).distance;
  return sum / static_cast<double>(model.contact_vertex_ids.size());
}

std::vector<RefinementResult> refine(const RefinementContext& ctx, const std::vector<HumanState>& states,
                                     const RefinementConfig& config) {
  if (config.iterations < 0) fail(ErrorCode::UsageError, "iteration count must be nonnegative");
  std::vector<RefinementResult> results(states.size());
  const SceneQuery query(ctx.scene);
  StepOptions options;
  options.geometry_only = config.geometry_only;

  parallel_for(static_cast<int>(states.size()), [&](int i) {
    RefinementResult& r = results[i];
    r.state = states[i];
    if (config.record_trajectory) {
      r.trajectory.push_back({r.state, mean_contact_distance(ctx.model, forward(ctx.model, r.state), query), 1.0, 0.0});
    }
    for (int t = 0; t < config.iterations; ++t) {
      const auto start = std::chrono::steady_clock::now();
      StepResult step = refine_step(ctx, r.state, options);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      r.state = step.state;
      if (config.record_trajectory) {
        const double dist = mean_contact_distance(ctx.model, forward(ctx.model, r.state), query);
        r.trajectory.push_back({r.state, dist, step.update.scale, ms});
      }
    }
  });
  return results;
}

SpatialIndex build_index(const ScenePointCloud& cloud, const RefinementConfig& config) {
  return SpatialIndex(config.max_points > 0 ? cloud.downsampled(config.max_points) : cloud);
}

AlignResult metric_align(const BodyModel& model, const HumanState& state, const ScenePointCloud& cloud,
                         const CameraIntrinsics& intrinsics, double cone_degrees) {
  const PosedMesh mesh = forward(model, state);
  const Vec3 head = mesh.joints.row(model.head_joint).transpose();
  const auto pixel = project(intrinsics, head);
  if (!pixel || !intrinsics.contains(pixel->x(), pixel->y())) {
    fail(ErrorCode::HeadNotVisible, "head joint does not project into the image");
  }
  const Vec3 ray = unproject(intrinsics, *pixel, 1.0).normalized();
  const double cos_limit = std::cos(cone_degrees * M_PI / 180.0);
  int best = -1;
  double best_depth = std::numeric_limits<double>::infinity();
  const Points3& pts = cloud.points();
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec3 p = pts.row(i).transpose();
    const double along = p.dot(ray);
    if (!(along > 0.0) || along < cos_limit * p.norm()) continue;
    if (along < best_depth) {
      best_depth = along;
      best = i;
    }
  }
  if (best < 0) fail(ErrorCode::NoScenePointOnRay, "no cloud point near the head ray");
  AlignResult r;
  r.scene_point = pts.row(best).transpose();
  r.scale = r.scene_point.z() / head.z();
  r.state = absorb_scale(state, r.scale, model);
  return r;
}

}  // namespace graft
