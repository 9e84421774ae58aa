// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/body_model.hpp"

#include "graft/rotation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

namespace graft {

HumanState HumanState::identity() {
  HumanState s;
  s.rotations.fill(identity_rot6d());
  return s;
}

bool HumanState::operator==(const HumanState& other) const {
  for (int i = 0; i < kStateJoints; ++i) {
    if (rotations[i] != other.rotations[i]) return false;
  }
  return translation == other.translation && shape == other.shape;
}

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::InvalidModel, message);
}

void check_id_list(const std::vector<int>& ids, int bound, const std::string& what) {
  std::set<int> seen;
  for (int id : ids) {
    require(id >= 0 && id < bound, what + " index out of range");
    require(seen.insert(id).second, what + " contains duplicates");
  }
}

}  // namespace

void BodyModel::finalize() {
  const int V = num_vertices();
  const int J = num_joints();
  require(V > 0 && J > 0, "model has no vertices or joints");
  require(shape_dirs.rows() == kShapeDim && shape_dirs.cols() == 3 * V, "shape_dirs must be 10 x V x 3");
  require(joint_regressor.rows() == J && joint_regressor.cols() == V, "joint_regressor must be J x V");
  require(skin_weights.rows() == V && skin_weights.cols() == J, "skin_weights must be V x J");

  for (int v = 0; v < V; ++v) {
    double sum = 0.0;
    for (int j = 0; j < J; ++j) {
      require(skin_weights(v, j) >= 0.0, "skin weights must be nonnegative");
      sum += skin_weights(v, j);
    }
    require(std::abs(sum - 1.0) <= 1e-6, "skin weight rows must sum to 1");
  }

  require(parents[0] == -1, "joint 0 must be the root");
  std::vector<std::vector<int>> children(J);
  for (int j = 1; j < J; ++j) {
    require(parents[j] >= 0 && parents[j] < J && parents[j] != j, "invalid parent index");
    children[parents[j]].push_back(j);
  }
  joint_order.clear();
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int j = queue.front();
    queue.pop_front();
    joint_order.push_back(j);
    for (int c : children[j]) queue.push_back(c);
  }
  require(static_cast<int>(joint_order.size()) == J, "parents do not form a tree rooted at joint 0");

  for (const auto& f : faces) {
    for (int i : f) require(i >= 0 && i < V, "face index out of range");
  }
  check_id_list(contact_vertex_ids, V, "contact_vertex_ids");
  check_id_list(surface_probe_ids, V, "surface_probe_ids");
  require(static_cast<int>(surface_probe_ids.size()) == kSurfaceProbes, "surface_probe_ids must hold 27 vertices");

  if (state_joint_map.empty()) {
    require(J == kStateJoints, "state_joint_map is required when the model does not have 52 joints");
    state_joint_map.resize(kStateJoints);
    for (int i = 0; i < kStateJoints; ++i) state_joint_map[i] = i;
  }
  require(static_cast<int>(state_joint_map.size()) == kStateJoints, "state_joint_map must have 52 entries");
  check_id_list(state_joint_map, J, "state_joint_map");
  require(state_joint_map[0] == 0, "state slot 0 must drive the root joint");
  require(head_joint >= 0 && head_joint < J, "head_joint out of range");

  if (vertex_areas.size() == 0) vertex_areas = mixed_voronoi_areas(template_vertices, faces);
  require(vertex_areas.size() == V, "vertex_areas must have one entry per vertex");
  require((vertex_areas.array() >= 0.0).all(), "vertex_areas must be nonnegative");

  template_offset = compute_template_offset(template_vertices, shape_dirs);
  {
    Eigen::Map<const VecX> t_flat(template_vertices.data(), 3 * V);
    const VecX residual = t_flat - shape_dirs.transpose() * template_offset;
    const VecX normal = shape_dirs * residual;
    const double scale = (shape_dirs * t_flat).norm();
    require(normal.norm() <= 1e-9 * std::max(scale, 1e-300), "template offset fails the normal equations");
  }

  skin_table.assign(V, {});
  for (int v = 0; v < V; ++v) {
    for (int j = 0; j < J; ++j) {
      if (skin_weights(v, j) != 0.0) skin_table[v].emplace_back(j, skin_weights(v, j));
    }
  }
}

std::vector<int> BodyModel::distal_joints(int first_slot) const {
  std::vector<bool> has_child(num_joints(), false);
  for (int j = 1; j < num_joints(); ++j) has_child[parents[j]] = true;
  std::vector<int> distal;
  for (int slot = first_slot; slot < first_slot + kHandJoints; ++slot) {
    const int joint = state_joint_map[slot];
    if (!has_child[joint]) distal.push_back(joint);
  }
  return distal;
}

Points3 shaped_vertices(const BodyModel& model, const ShapeVec& shape) {
  Points3 out = model.template_vertices;
  Eigen::Map<VecX> flat(out.data(), out.size());
  flat.noalias() += model.shape_dirs.transpose() * shape;
  return out;
}

PosedMesh forward(const BodyModel& model, const HumanState& state) {
  const int J = model.num_joints();
  if (static_cast<int>(model.state_joint_map.size()) != kStateJoints || model.skin_table.empty()) {
    fail(ErrorCode::DimensionMismatch, "body model is not finalized for the 52-slot state layout");
  }
  const Points3 shaped = shaped_vertices(model, state.shape);
  const Points3 rest_joints = model.joint_regressor * shaped;

  std::vector<Mat3> local(J, Mat3::Identity());
  for (int slot = 0; slot < kStateJoints; ++slot) {
    local[model.state_joint_map[slot]] = rot6d_to_matrix(state.rotations[slot]);
  }

  std::vector<Mat3> world_R(J);
  std::vector<Vec3> world_t(J);
  for (int j : model.joint_order) {
    const Vec3 rest = rest_joints.row(j).transpose();
    const int p = model.parents[j];
    if (p < 0) {
      world_R[j] = local[j];
      world_t[j] = rest;
    } else {
      world_R[j] = world_R[p] * local[j];
      world_t[j] = world_R[p] * (rest - rest_joints.row(p).transpose()) + world_t[p];
    }
  }

  PosedMesh mesh;
  mesh.joints.resize(J, 3);
  std::vector<Vec3> skin_t(J);
  for (int j = 0; j < J; ++j) {
    mesh.joints.row(j) = (world_t[j] + state.translation).transpose();
    skin_t[j] = world_t[j] - world_R[j] * rest_joints.row(j).transpose();
  }

  const int V = model.num_vertices();
  mesh.vertices.resize(V, 3);
  for (int v = 0; v < V; ++v) {
    const Vec3 rest = shaped.row(v).transpose();
    Vec3 acc = Vec3::Zero();
    for (const auto& [j, w] : model.skin_table[v]) acc += w * (world_R[j] * rest + skin_t[j]);
    mesh.vertices.row(v) = (acc + state.translation).transpose();
  }
  mesh.joint_rotations = std::move(world_R);
  return mesh;
}

HumanState absorb_scale(const HumanState& state, double scale, const BodyModel& model) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    fail(ErrorCode::NonPositiveScale, "scale must be positive and finite");
  }
  if (scale == 1.0) return state;
  HumanState out = state;
  const ShapeVec& c = model.template_offset;
  out.shape = scale * (state.shape + c) - c;
  out.translation = scale * state.translation;
  return out;
}

ShapeVec compute_template_offset(const Points3& template_vertices, const RowMatrix& shape_dirs) {
  const Eigen::Index n = template_vertices.size();
  if (shape_dirs.rows() != kShapeDim || shape_dirs.cols() != n) {
    fail(ErrorCode::DimensionMismatch, "shape_dirs do not match the template");
  }
  Eigen::Map<const VecX> t_flat(template_vertices.data(), n);
  const Eigen::Matrix<double, kShapeDim, kShapeDim> gram = shape_dirs * shape_dirs.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kShapeDim, kShapeDim>> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo >= 1e12) {
    fail(ErrorCode::RankDeficientBlendshapes, "blendshape Gram matrix is singular or ill-conditioned");
  }
  const ShapeVec rhs = shape_dirs * t_flat;
  const auto ldlt = gram.ldlt();
  ShapeVec c = ldlt.solve(rhs);
  c += ldlt.solve(rhs - gram * c);
  return c;
}

VecX mixed_voronoi_areas(const Points3& vertices, const std::vector<std::array<int, 3>>& faces) {
  VecX areas = VecX::Zero(vertices.rows());
  for (const auto& f : faces) {
    const Vec3 p[3] = {vertices.row(f[0]).transpose(), vertices.row(f[1]).transpose(),
                       vertices.row(f[2]).transpose()};
    const double twice_area = (p[1] - p[0]).cross(p[2] - p[0]).norm();
    if (twice_area <= 0.0) continue;
    const double area = 0.5 * twice_area;
    double dots[3];
    for (int i = 0; i < 3; ++i) {
      dots[i] = (p[(i + 1) % 3] - p[i]).dot(p[(i + 2) % 3] - p[i]);
    }
    const int obtuse = dots[0] < 0 ? 0 : dots[1] < 0 ? 1 : dots[2] < 0 ? 2 : -1;
    if (obtuse < 0) {
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const int k = (i + 2) % 3;
        const double cot_j = dots[j] / twice_area;
        const double cot_k = dots[k] / twice_area;
        areas[f[i]] += ((p[i] - p[k]).squaredNorm() * cot_j + (p[i] - p[j]).squaredNorm() * cot_k) / 8.0;
      }
    } else {
      for (int i = 0; i < 3; ++i) areas[f[i]] += (i == obtuse) ? area / 2.0 : area / 4.0;
    }
  }
  return areas;
}

std::vector<int> farthest_point_sample(const Points3& vertices, int count) {
  const int n = static_cast<int>(vertices.rows());
  if (count > n) fail(ErrorCode::DimensionMismatch, "cannot sample more points than vertices");
  std::vector<int> picked;
  if (count <= 0) return picked;
  const Eigen::RowVector3d centroid = vertices.colwise().mean();
  int seed = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double d = (vertices.row(i) - centroid).squaredNorm();
    if (d < best) {
      best = d;
      seed = i;
    }
  }
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  int current = seed;
  for (int s = 0; s < count; ++s) {
    picked.push_back(current);
    int next = -1;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], (vertices.row(i) - vertices.row(current)).squaredNorm());
      if (dist[i] > far) {
        far = dist[i];
        next = i;
      }
    }
    current = next;
  }
  return picked;
}

namespace {

std::vector<int64_t> to_i64(const std::vector<int>& v) { return {v.begin(), v.end()}; }

std::vector<int> to_int(const std::vector<int64_t>& v) {
  std::vector<int> out;
  out.reserve(v.size());
  for (auto x : v) {
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      fail(ErrorCode::InvalidModel, "index tensor value out of range");
    }
    out.push_back(static_cast<int>(x));
  }
  return out;
}

std::vector<double> row_major(const RowMatrix& m) { return {m.data(), m.data() + m.size()}; }

void expect_dims(const Tensor& t, std::vector<uint64_t> dims) {
  if (t.dims != dims) fail(ErrorCode::InvalidModel, "tensor '" + t.name + "' has unexpected dims");
}

}  // namespace

TensorContainer BodyModel::to_container() const {
  const auto V = static_cast<uint64_t>(num_vertices());
  const auto J = static_cast<uint64_t>(num_joints());
  TensorContainer c;
  c.add(Tensor::make_f64("template_vertices", {V, 3},
                         {template_vertices.data(), template_vertices.data() + template_vertices.size()}));
  c.add(Tensor::make_f64("shape_dirs", {kShapeDim, V, 3}, row_major(shape_dirs)));
  c.add(Tensor::make_f64("joint_regressor", {J, V}, row_major(joint_regressor)));
  c.add(Tensor::make_i64("parents", {J}, to_i64(parents)));
  c.add(Tensor::make_f64("skin_weights", {V, J}, row_major(skin_weights)));
  std::vector<int64_t> face_ids;
  for (const auto& f : faces) face_ids.insert(face_ids.end(), f.begin(), f.end());
  c.add(Tensor::make_i64("faces", {faces.size(), 3}, std::move(face_ids)));
  c.add(Tensor::make_i64("contact_vertex_ids", {contact_vertex_ids.size()}, to_i64(contact_vertex_ids)));
  c.add(Tensor::make_i64("surface_probe_ids", {surface_probe_ids.size()}, to_i64(surface_probe_ids)));
  c.add(Tensor::make_f64("vertex_areas", {V}, {vertex_areas.data(), vertex_areas.data() + vertex_areas.size()}));
  c.add(Tensor::make_i64("state_joint_map", {kStateJoints}, to_i64(state_joint_map)));
  c.add(Tensor::make_i64("head_joint", {1}, {head_joint}));
  return c;
}

BodyModel BodyModel::from_container(const TensorContainer& c) {
  BodyModel m;
  const Tensor& tv = c.get("template_vertices");
  if (tv.dims.size() != 2 || tv.dims[1] != 3) fail(ErrorCode::InvalidModel, "template_vertices must be V x 3");
  const uint64_t V = tv.dims[0];
  const Tensor& parents = c.get("parents");
  if (parents.dims.size() != 1) fail(ErrorCode::InvalidModel, "parents must be rank 1");
  const uint64_t J = parents.dims[0];

  const Tensor& sd = c.get("shape_dirs");
  expect_dims(sd, {kShapeDim, V, 3});
  const Tensor& jr = c.get("joint_regressor");
  expect_dims(jr, {J, V});
  const Tensor& sw = c.get("skin_weights");
  expect_dims(sw, {V, J});
  const Tensor& faces = c.get("faces");
  if (faces.dims.size() != 2 || faces.dims[1] != 3) fail(ErrorCode::InvalidModel, "faces must be F x 3");
  const Tensor& contact = c.get("contact_vertex_ids");
  const Tensor& probes = c.get("surface_probe_ids");

  const auto tv_values = tv.to_f64();
  m.template_vertices = Eigen::Map<const Points3>(tv_values.data(), static_cast<Eigen::Index>(V), 3);
  const auto sd_values = sd.to_f64();
  m.shape_dirs = Eigen::Map<const RowMatrix>(sd_values.data(), kShapeDim, static_cast<Eigen::Index>(3 * V));
  const auto jr_values = jr.to_f64();
  m.joint_regressor = Eigen::Map<const RowMatrix>(jr_values.data(), static_cast<Eigen::Index>(J),
                                                  static_cast<Eigen::Index>(V));
  const auto sw_values = sw.to_f64();
  m.skin_weights = Eigen::Map<const RowMatrix>(sw_values.data(), static_cast<Eigen::Index>(V),
                                               static_cast<Eigen::Index>(J));
  m.parents = to_int(parents.i64());
  const auto face_ids = to_int(faces.i64());
  for (size_t i = 0; i + 2 < face_ids.size(); i += 3) m.faces.push_back({face_ids[i], face_ids[i + 1], face_ids[i + 2]});
  m.contact_vertex_ids = to_int(contact.i64());
  m.surface_probe_ids = to_int(probes.i64());

  if (const Tensor* areas = c.find("vertex_areas")) {
    expect_dims(*areas, {V});
    const auto values = areas->to_f64();
    m.vertex_areas = Eigen::Map<const VecX>(values.data(), static_cast<Eigen::Index>(V));
  }
  if (const Tensor* map = c.find("state_joint_map")) m.state_joint_map = to_int(map->i64());
  if (const Tensor* head = c.find("head_joint")) {
    if (head->i64().size() != 1) fail(ErrorCode::InvalidModel, "head_joint must hold one index");
    m.head_joint = to_int(head->i64())[0];
  }
  m.finalize();
  return m;
}

}  // namespace graft
