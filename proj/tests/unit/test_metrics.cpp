// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/metrics.hpp"
#include "graft/synthetic.hpp"
#include "test_util.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace graft {
namespace {

Points3 rows(std::initializer_list<Vec3> v) {
  Points3 p(static_cast<Eigen::Index>(v.size()), 3);
  int i = 0;
  for (const Vec3& x : v) p.row(i++) = x.transpose();
  return p;
}

VecX vec(std::initializer_list<double> v) {
  VecX x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

TEST(ContactPrf, HandCounts) {
  const PrfResult r = contact_prf({true, true, false, false, true}, {true, false, true, false, true});
  EXPECT_NEAR(r.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.recall, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-15);
  EXPECT_FALSE(r.precision_undefined || r.recall_undefined);

  const PrfResult skew = contact_prf({true, false, false, false}, {true, true, true, false});
  EXPECT_EQ(skew.precision, 1.0);
  EXPECT_NEAR(skew.recall, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(skew.f1, 0.5, 1e-15);
}

TEST(ContactPrf, UndefinedCases) {
  const PrfResult none = contact_prf({false, false}, {true, false});
  EXPECT_TRUE(none.precision_undefined);
  EXPECT_FALSE(none.recall_undefined);
  EXPECT_EQ(none.f1, 0.0);
  const PrfResult empty = contact_prf({false, false}, {false, false});
  EXPECT_TRUE(empty.precision_undefined && empty.recall_undefined);
  EXPECT_EQ(empty.f1, 0.0);
  EXPECT_GRAFT_ERROR(contact_prf({true}, {true, false}), ErrorCode::LengthMismatch);
}

TEST(V2s, HandComputed) {
  const Points3 dp = rows({{0, 0.01, 0}, {0, 0, 0.02}, {0.03, 0, 0}});
  const Points3 dg = rows({{0, 0.01, 0}, {0, 0, 0}, {0, 0.04, 0}});
  // Errors 0, 0.02, 0.05 m with weights 1, 2, 1.
  EXPECT_NEAR(v2s_mm(dp, dg, vec({1, 2, 1})), 22.5, 1e-9);
  EXPECT_NEAR(v2s_mm(dp, dp, vec({1, 2, 1})), 0.0, 1e-15);
  EXPECT_GRAFT_ERROR(v2s_mm(dp, dg, vec({1, 2})), ErrorCode::LengthMismatch);
  EXPECT_GRAFT_ERROR(v2s_mm(dp, dg, vec({0, 0, 0})), ErrorCode::AllDegenerate);
}

TEST(D2s, HandComputedAndScaleInvariant) {
  const Points3 dp = rows({{1, 0, 0}, {1, 1, 0}, {0, 0, 0}, {0, 0, 2}});
  const Points3 dg = rows({{0, 1, 0}, {1, 0, 0}, {1, 0, 0}, {0, 0, -1}});
  const VecX w = vec({1, 3, 5, 2});
  // 90 deg (w 1), 45 deg (w 3), degenerate (skipped), 180 deg (w 2).
  const double expected = (90.0 + 3 * 45.0 + 2 * 180.0) / 6.0;
  EXPECT_NEAR(d2s_deg(dp, dg, w), expected, 1e-9);
  EXPECT_NEAR(d2s_deg(7.0 * dp, 0.3 * dg, w), expected, 1e-9);
  EXPECT_GRAFT_ERROR(d2s_deg(Points3::Zero(2, 3), dg.topRows(2), vec({1, 1})), ErrorCode::AllDegenerate);
}

TEST(D2s, RandomScaleInvariance) {
  Rng rng(61);
  Points3 dp(40, 3), dg(40, 3);
  for (int i = 0; i < 40; ++i) {
    dp.row(i) = Vec3(rng.normal(), rng.normal(), rng.normal()).transpose();
    dg.row(i) = Vec3(rng.normal(), rng.normal(), rng.normal()).transpose();
  }
  const VecX w = VecX::NullaryExpr(40, [&] { return rng.uniform(0.1, 2.0); });
  EXPECT_NEAR(d2s_deg(dp, dg, w), d2s_deg(0.01 * dp, 250.0 * dg, w), 1e-9);
}

TEST(PaMpjpe, HandComputedAnisotropicCross) {
  const Points3 gt = rows({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}});
  const Points3 pred = rows({{1, 0, 0}, {-1, 0, 0}, {0, 2, 0}, {0, -2, 0}});
  // Optimal scale 1.5 / 2.5 = 0.6, identity rotation; residuals 0.4, 0.4, 0.2, 0.2.
  EXPECT_NEAR(pa_mpjpe_mm(pred, gt), 300.0, 1e-9);
}

TEST(PaMpjpe, MatchesEigenUmeyama) {
  Rng rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    Points3 gt(22, 3), pred(22, 3);
    for (int i = 0; i < 22; ++i) {
      gt.row(i) = Vec3(rng.normal(), rng.normal(), rng.normal()).transpose();
      pred.row(i) = gt.row(i) + 0.1 * Eigen::RowVector3d(rng.normal(), rng.normal(), rng.normal());
    }
    const Eigen::Matrix4d T = Eigen::umeyama(pred.transpose(), gt.transpose(), true);
    double err = 0.0;
    for (int i = 0; i < 22; ++i) {
      err += ((T * pred.row(i).transpose().homogeneous()).head<3>() - gt.row(i).transpose()).norm();
    }
    EXPECT_NEAR(pa_mpjpe_mm(pred, gt), 1000.0 * err / 22.0, 1e-9);
  }
}

TEST(PaMpjpe, SimilarityInvariance) {
  Rng rng(63);
  Points3 gt(22, 3), pred(22, 3);
  for (int i = 0; i < 22; ++i) {
    gt.row(i) = Vec3(rng.normal(), rng.normal(), rng.normal()).transpose();
    pred.row(i) = Vec3(rng.normal(), rng.normal(), rng.normal()).transpose();
  }
  const double base = pa_mpjpe_mm(pred, gt);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat3 R = axis_angle_to_matrix(rng.unit_vector() * rng.uniform(0, M_PI));
    const double s = rng.uniform(0.2, 5.0);
    const Eigen::RowVector3d t(rng.normal(), rng.normal(), rng.normal());
    const Points3 moved = ((s * pred * R.transpose()).rowwise() + t).eval();
    EXPECT_NEAR(pa_mpjpe_mm(moved, gt), base, 1e-9);
    EXPECT_NEAR(pa_mpjpe_mm((s * gt * R.transpose()).rowwise() + t, (s * gt * R.transpose()).rowwise() + t), 0.0,
                1e-9);
  }
  EXPECT_NEAR(pa_mpjpe_mm(pred, pred), 0.0, 1e-9);
}

TEST(PaMpjpe, DegenerateConfigurations) {
  const Points3 line = rows({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}});
  const Points3 other = rows({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_GRAFT_ERROR(pa_mpjpe_mm(line, other), ErrorCode::DegenerateConfiguration);
  EXPECT_GRAFT_ERROR(pa_mpjpe_mm(other.topRows(2), other.topRows(2)), ErrorCode::DegenerateConfiguration);
  EXPECT_GRAFT_ERROR(pa_mpjpe_mm(other, other.topRows(3)), ErrorCode::LengthMismatch);
}

class ContactFixture : public ::testing::Test {
 protected:
  BodyModel model = make_toy_model();
  SpatialIndex floor{make_room(false)};
  SceneQuery query{floor};
  HumanState gt = standing_state(model, 0.0, 3.0, 0.2);
};

TEST_F(ContactFixture, LabelsFollowThreshold) {
  const PosedMesh mesh = forward(model, gt);
  const auto labels = contact_labels(model, mesh, query, 0.05);
  ASSERT_EQ(labels.size(), model.contact_vertex_ids.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    const double d = query.nearest(mesh.vertices.row(model.contact_vertex_ids[i]).transpose()).distance;
    EXPECT_EQ(labels[i], d < 0.05);
  }
  HumanState lifted = gt;
  lifted.translation.y() -= 1.0;  // camera y points down
  for (bool l : contact_labels(model, forward(model, lifted), query, 0.05)) EXPECT_FALSE(l);
  EXPECT_GRAFT_ERROR(contact_labels(model, mesh, query, 0.0), ErrorCode::UsageError);
}

TEST_F(ContactFixture, SelfEvaluationIsPerfect) {
  const EvalReport r = evaluate(model, gt, query, gt, query, 0.05);
  EXPECT_EQ(r.prf.f1, 1.0);
  EXPECT_EQ(r.v2s_mm, 0.0);
  EXPECT_TRUE(r.d2s_defined);
  EXPECT_EQ(r.d2s_deg, 0.0);
  EXPECT_NEAR(r.pa_mpjpe_mm, 0.0, 1e-9);
}

TEST_F(ContactFixture, TranslationShiftsDisplacements) {
  HumanState moved = gt;
  moved.translation.y() -= 0.02;
  const EvalReport r = evaluate(model, moved, query, gt, query, 0.05);
  // Every contact vertex with a floor point straight below moves its
  // displacement by exactly 2 cm, so V2S is at most 20 mm.
  EXPECT_GT(r.v2s_mm, 0.0);
  EXPECT_LE(r.v2s_mm, 20.0 + 1e-9);
  EXPECT_NEAR(r.pa_mpjpe_mm, 0.0, 1e-9);
}

TEST_F(ContactFixture, JointsAreStateSlots) {
  const PosedMesh mesh = forward(model, gt);
  const Points3 j = body_joints(model, mesh);
  ASSERT_EQ(j.rows(), 22);
  EXPECT_EQ(j.row(5), mesh.joints.row(model.state_joint_map[5]));
  const VecX w = contact_weights(model);
  EXPECT_EQ(w.size(), static_cast<Eigen::Index>(model.contact_vertex_ids.size()));
  EXPECT_GT(w.minCoeff(), 0.0);
}

}  // namespace
}  // namespace graft
