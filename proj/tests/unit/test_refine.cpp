// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/refine.hpp"
#include "graft/synthetic.hpp"
#include "graft/transformer.hpp"
#include "test_util.hpp"

#include <cmath>

namespace graft {
namespace {

class RefineFixture : public ::testing::Test {
 protected:
  SyntheticScenario sc = synthesize_scenario({});
  SpatialIndex index{sc.scene};
  FeatureGrids grids = random_feature_grids(ArchConfig::micro(), sc.intrinsics, 14.0, 1);

  std::vector<HumanState> humans() const {
    Rng rng(51);
    std::vector<HumanState> out{sc.init, sc.gt};
    out.push_back(sample_query(sc.gt, PerturbationSpec{}.scaled(2.0), rng));
    return out;
  }
};

TEST_F(RefineFixture, ZeroWeightsAreAFixedPoint) {
  const Weights w = Weights::zeros(ArchConfig::micro());
  for (const FeatureGrids* g : std::initializer_list<const FeatureGrids*>{nullptr, &grids}) {
    const RefinementContext ctx{sc.model, index, w, g};
    RefinementConfig config;
    config.iterations = 3;
    const auto in = humans();
    const auto out = refine(ctx, in, config);
    ASSERT_EQ(out.size(), in.size());
    for (size_t i = 0; i < in.size(); ++i) {
      EXPECT_TRUE(out[i].state == in[i]);
      ASSERT_EQ(out[i].trajectory.size(), 4u);
      for (const auto& e : out[i].trajectory) {
        EXPECT_TRUE(e.state == in[i]);
        EXPECT_EQ(e.scale, 1.0);
      }
    }
  }
}

TEST_F(RefineFixture, FreshNetworkPredictsTheNoOpUpdate) {
  const Weights w = Weights::random(ArchConfig::micro(), 2);
  const RefinementContext ctx{sc.model, index, w, &grids};
  const StepResult step = refine_step(ctx, sc.init);
  EXPECT_TRUE(step.state == sc.init);
  EXPECT_EQ(step.update.scale, 1.0);
}

TEST_F(RefineFixture, ZeroIterationsIsIdentity) {
  const Weights w = Weights::random(ArchConfig::micro(), 3, {false});
  const RefinementContext ctx{sc.model, index, w, &grids};
  RefinementConfig config;
  config.iterations = 0;
  const auto in = humans();
  const auto out = refine(ctx, in, config);
  for (size_t i = 0; i < in.size(); ++i) {
    EXPECT_TRUE(out[i].state == in[i]);
    EXPECT_EQ(out[i].trajectory.size(), 1u);
  }
  config.iterations = -1;
  EXPECT_GRAFT_ERROR(refine(ctx, in, config), ErrorCode::UsageError);
}

TEST_F(RefineFixture, ParallelRefineMatchesSequentialSteps) {
  const Weights w = Weights::random(ArchConfig::micro(), 4, {false});
  const RefinementContext ctx{sc.model, index, w, &grids};
  RefinementConfig config;
  config.iterations = 2;
  const auto in = humans();
  const auto out = refine(ctx, in, config);
  for (size_t i = 0; i < in.size(); ++i) {
    HumanState s = in[i];
    for (int t = 0; t < 2; ++t) {
      s = refine_step(ctx, s).state;
      EXPECT_TRUE(out[i].trajectory[t + 1].state == s);
    }
    EXPECT_TRUE(out[i].state == s);
    EXPECT_FALSE(out[i].state == in[i]);
  }
}

TEST_F(RefineFixture, GeometryOnlyIgnoresGrids) {
  const Weights w = Weights::random(ArchConfig::micro(), 5, {false});
  const RefinementContext with_grids{sc.model, index, w, &grids};
  const RefinementContext without{sc.model, index, w, nullptr};
  StepOptions geometry;
  geometry.geometry_only = true;
  EXPECT_TRUE(refine_step(with_grids, sc.init, geometry).state == refine_step(without, sc.init).state);
  EXPECT_FALSE(refine_step(with_grids, sc.init).state == refine_step(without, sc.init).state);
}

TEST_F(RefineFixture, DroppingAllContextEqualsZeroContext) {
  const Weights w = Weights::random(ArchConfig::micro(), 6, {false});
  const RefinementContext ctx{sc.model, index, w, &grids};
  FeatureGrids blank = grids;
  for (auto& stream : blank.levels) {
    for (auto& level : stream) std::fill(level.values.begin(), level.values.end(), 0.0);
  }
  const std::vector<bool> all(kNumTokens, true);
  StepOptions dropped;
  dropped.dropped_context = &all;
  const HumanState a = refine_step(ctx, sc.init, dropped).state;
  // Zero rows are not the same as zero features (biases and stream
  // embeddings), so compare against an explicit zero-context forward pass.
  const PosedMesh mesh = forward(sc.model, sc.init);
  const TokenProbes probes = compute_probes(sc.model, mesh, SceneQuery(index));
  std::vector<RowMatrix> zero;
  for (int k = 0; k < kNumTokens; ++k) zero.push_back(RowMatrix::Zero(context_size(k), w.arch.width));
  const HumanState b =
      apply_update(sc.init, decode(w, transformer_forward(w, tokenize(w, sc.init, probes), &zero)), sc.model);
  EXPECT_TRUE(a == b);
}

TEST_F(RefineFixture, DownsampledIndex) {
  RefinementConfig config;
  config.max_points = 500;
  EXPECT_LE(build_index(sc.scene, config).cloud().size(), 500);
  config.max_points = 0;
  EXPECT_EQ(build_index(sc.scene, config).cloud().size(), sc.scene.size());
}

ScenePointCloud cloud_with(const ScenePointCloud& room, const Points3& extra) {
  Points3 p(room.size() + extra.rows(), 3), n(room.size() + extra.rows(), 3);
  p << room.points(), extra;
  n << room.normals(), Points3::Constant(extra.rows(), 3, 0.0).rowwise() + Eigen::RowVector3d(0, 0, -1);
  return ScenePointCloud(p, n);
}

TEST(MetricAlign, ExactPointAtHeadRecoversScale) {
  const BodyModel m = make_toy_model();
  const HumanState gt = standing_state(m, 0.1, 3.0, 0.0);
  const Vec3 head = forward(m, gt).joints.row(m.head_joint).transpose();
  Points3 extra(1, 3);
  extra.row(0) = head.transpose();
  const ScenePointCloud cloud = cloud_with(make_room(true), extra);
  const HumanState too_big = absorb_scale(gt, 1.25, m);
  const AlignResult r = metric_align(m, too_big, cloud, default_intrinsics());
  EXPECT_NEAR(r.scale, 0.8, 1e-12);
  EXPECT_LT((forward(m, r.state).vertices - forward(m, gt).vertices).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MetricAlign, RecoversScaleFromBodySurface) {
  // The first hit is the head surface, about 0.1 m in front of the head joint;
  // at 6 m that biases the ratio by under 2%.
  const BodyModel m = make_toy_model();
  const HumanState gt = standing_state(m, 0.0, 6.0, 0.0);
  const ScenePointCloud cloud = cloud_with(make_room(false), forward(m, gt).vertices);
  const AlignResult r = metric_align(m, absorb_scale(gt, 1.25, m), cloud, default_intrinsics());
  EXPECT_NEAR(r.scale, 0.8, 0.8 * 0.02);
  EXPECT_LE(r.scale, 0.8);
}

TEST(MetricAlign, Errors) {
  const BodyModel m = make_toy_model();
  HumanState behind = standing_state(m, 0.0, 3.0, 0.0);
  behind.translation.z() = -3.0;
  const ScenePointCloud room = make_room(true);
  EXPECT_GRAFT_ERROR(metric_align(m, behind, room, default_intrinsics()), ErrorCode::HeadNotVisible);

  Points3 far(1, 3), n(1, 3);
  far << 5, 0, 1;
  n << 0, 0, -1;
  EXPECT_GRAFT_ERROR(metric_align(m, standing_state(m, 0.0, 3.0, 0.0), ScenePointCloud(far, n), default_intrinsics()),
                     ErrorCode::NoScenePointOnRay);
}

}  // namespace
}  // namespace graft
