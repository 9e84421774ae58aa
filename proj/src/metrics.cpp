// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/metrics.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace graft {

std::vector<bool> contact_labels(const BodyModel& model, const PosedMesh& mesh, const SceneQuery& scene, double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::UsageError, "contact threshold must be positive");
  std::vector<bool> labels;
  labels.reserve(model.contact_vertex_ids.size());
  for (int v : model.contact_vertex_ids) labels.push_back(scene.nearest(mesh.vertices.row(v).transpose()).distance < tau);
  return labels;
}

PrfResult contact_prf(const std::vector<bool>& predicted, const std::vector<bool>& ground_truth) {
  if (predicted.size() != ground_truth.size()) fail(ErrorCode::LengthMismatch, "label vectors differ in length");
  int tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    tp += predicted[i] && ground_truth[i];
    fp += predicted[i] && !ground_truth[i];
    fn += !predicted[i] && ground_truth[i];
  }
  PrfResult r;
  r.precision_undefined = tp + fp == 0;
  r.recall_undefined = tp + fn == 0;
  r.precision = r.precision_undefined ? 0.0 : static_cast<double>(tp) / (tp + fp);
  r.recall = r.recall_undefined ? 0.0 : static_cast<double>(tp) / (tp + fn);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

Points3 contact_displacements(const BodyModel& model, const PosedMesh& mesh, const SceneQuery& scene) {
  Points3 d(static_cast<Eigen::Index>(model.contact_vertex_ids.size()), 3);
  for (size_t i = 0; i < model.contact_vertex_ids.size(); ++i) {
    const Vec3 p = mesh.vertices.row(model.contact_vertex_ids[i]).transpose();
    d.row(i) = (scene.nearest(p).point - p).transpose();
  }
  return d;
}

namespace {

void check_pair(const Points3& a, const Points3& b, const VecX& w) {
  if (a.rows() != b.rows() || a.rows() != w.size()) fail(ErrorCode::LengthMismatch, "displacement sets differ in length");
  if (a.rows() == 0) fail(ErrorCode::LengthMismatch, "no contact vertices");
}

}  // namespace

double v2s_mm(const Points3& d_pred, const Points3& d_gt, const VecX& w) {
  check_pair(d_pred, d_gt, w);
  const double total = w.sum();
  if (!(total > 0.0)) fail(ErrorCode::AllDegenerate, "contact weights sum to zero");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) acc += w[i] * (d_pred.row(i) - d_gt.row(i)).norm();
  return 1000.0 * acc / total;
}

double d2s_deg(const Points3& d_pred, const Points3& d_gt, const VecX& w) {
  check_pair(d_pred, d_gt, w);
  double acc = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double np = d_pred.row(i).norm();
    const double ng = d_gt.row(i).norm();
    if (np < 1e-9 || ng < 1e-9) continue;
    // atan2 stays accurate near 0 and 180 degrees, where acos loses digits.
    const Vec3 a = d_pred.row(i).transpose();
    const Vec3 b = d_gt.row(i).transpose();
    acc += w[i] * std::atan2(a.cross(b).norm(), a.dot(b));
    total += w[i];
  }
  if (!(total > 0.0)) fail(ErrorCode::AllDegenerate, "every displacement pair is degenerate");
  return acc / total * 180.0 / M_PI;
}

double pa_mpjpe_mm(const Points3& pred, const Points3& gt) {
  if (pred.rows() != gt.rows()) fail(ErrorCode::LengthMismatch, "joint sets differ in length");
  const Eigen::Index n = pred.rows();
  if (n < 3) fail(ErrorCode::DegenerateConfiguration, "need at least three joints");
  const Eigen::RowVector3d mu_p = pred.colwise().mean();
  const Eigen::RowVector3d mu_g = gt.colwise().mean();
  const Points3 P = pred.rowwise() - mu_p;
  const Points3 G = gt.rowwise() - mu_g;

  Eigen::JacobiSVD<Eigen::MatrixXd> shape_svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto sv = shape_svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) {
    fail(ErrorCode::DegenerateConfiguration, "predicted joints are collinear");
  }

  const Mat3 cov = G.transpose() * P / static_cast<double>(n);
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(2, 2) = -1.0;
  const Mat3 R = svd.matrixU() * S * svd.matrixV().transpose();
  const double var_p = P.squaredNorm() / static_cast<double>(n);
  const double scale = (svd.singularValues().asDiagonal() * S).trace() / var_p;

  double err = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 aligned = scale * R * P.row(i).transpose();
    err += (aligned - G.row(i).transpose()).norm();
  }
  return 1000.0 * err / static_cast<double>(n);
}

VecX contact_weights(const BodyModel& model) {
  VecX w(static_cast<Eigen::Index>(model.contact_vertex_ids.size()));
  for (size_t i = 0; i < model.contact_vertex_ids.size(); ++i) w[i] = model.vertex_areas[model.contact_vertex_ids[i]];
  return w;
}

Points3 body_joints(const BodyModel& model, const PosedMesh& mesh) {
  Points3 out(1 + kBodyJoints, 3);
  for (int s = 0; s <= kBodyJoints; ++s) out.row(s) = mesh.joints.row(model.state_joint_map[s]);
  return out;
}

EvalReport evaluate(const BodyModel& model, const HumanState& predicted, const SceneQuery& predicted_scene,
                    const HumanState& ground_truth, const SceneQuery& ground_truth_scene, double tau) {
  const PosedMesh pm = forward(model, predicted);
  const PosedMesh gm = forward(model, ground_truth);
  EvalReport r;
  r.tau = tau;
  r.prf = contact_prf(contact_labels(model, pm, predicted_scene, tau), contact_labels(model, gm, ground_truth_scene, tau));
  const Points3 dp = contact_displacements(model, pm, predicted_scene);
  const Points3 dg = contact_displacements(model, gm, ground_truth_scene);
  const VecX w = contact_weights(model);
  r.v2s_mm = v2s_mm(dp, dg, w);
  try {
    r.d2s_deg = d2s_deg(dp, dg, w);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllDegenerate) throw;
    r.d2s_defined = false;
    r.d2s_deg = 0.0;
  }
  r.pa_mpjpe_mm = pa_mpjpe_mm(body_joints(model, pm), body_joints(model, gm));
  return r;
}

}  // namespace graft
