// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/synthetic.hpp"

#include "graft/rotation.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <tuple>

namespace graft {
namespace {

using SkinEntry = std::vector<std::pair<int, double>>;

// Joint ids of the body part of the layout.
enum Joint : int {
  kPelvis = 0, kLeftHip = 1, kRightHip = 2, kSpine1 = 3, kLeftKnee = 4, kRightKnee = 5, kSpine2 = 6,
  kLeftAnkle = 7, kRightAnkle = 8, kSpine3 = 9, kLeftFoot = 10, kRightFoot = 11, kNeck = 12,
  kLeftCollar = 13, kRightCollar = 14, kHead = 15, kLeftShoulder = 16, kRightShoulder = 17,
  kLeftElbow = 18, kRightElbow = 19, kLeftWrist = 20, kRightWrist = 21,
};

constexpr int kBodyParents[1 + kBodyJoints] = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};

struct Builder {
  std::vector<Vec3> vertices;
  std::vector<SkinEntry> skin;
  std::vector<std::array<int, 3>> faces;

  int add(const Vec3& p, SkinEntry w) {
    vertices.push_back(p);
    skin.push_back(std::move(w));
    return static_cast<int>(vertices.size()) - 1;
  }

  // Ring of n vertices around the y axis (axis 'y') or the x axis (axis 'x').
  std::vector<int> ring(const Vec3& c, char axis, double r1, double r2, int n, const SkinEntry& w) {
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) {
      const double phi = 2.0 * M_PI * i / n;
      const Vec3 offset = axis == 'y' ? Vec3(r1 * std::cos(phi), 0.0, r2 * std::sin(phi))
                                      : Vec3(0.0, r1 * std::cos(phi), r2 * std::sin(phi));
      ids.push_back(add(c + offset, w));
    }
    return ids;
  }

  void bridge(const std::vector<int>& a, const std::vector<int>& b) {
    const size_t n = a.size();
    for (size_t i = 0; i < n; ++i) {
      const size_t j = (i + 1) % n;
      faces.push_back({a[i], a[j], b[i]});
      faces.push_back({a[j], b[j], b[i]});
    }
  }

  void fan(const std::vector<int>& ring_ids, int apex) {
    for (size_t i = 0; i < ring_ids.size(); ++i) faces.push_back({ring_ids[i], ring_ids[(i + 1) % ring_ids.size()], apex});
  }
};

std::vector<int> concat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }

}  // namespace

BodyModel make_toy_model(const ToyModelOptions& options) {
  Builder b;
  std::vector<int> contact;
  auto contact_add = [&](const std::vector<int>& ids) { contact.insert(contact.end(), ids.begin(), ids.end()); };

  // Torso.
  const auto pelvis_ring = b.ring({0, 0.95, 0}, 'y', 0.15, 0.10, 8, {{kPelvis, 1.0}});
  const auto spine1_ring = b.ring({0, 1.05, 0}, 'y', 0.14, 0.09, 8, {{kSpine1, 1.0}});
  const auto spine2_ring = b.ring({0, 1.20, 0}, 'y', 0.14, 0.09, 8, {{kSpine2, 1.0}});
  const auto spine3_ring = b.ring({0, 1.33, 0}, 'y', 0.16, 0.10, 8, {{kSpine3, 1.0}});
  std::vector<int> chest_ring;
  for (int i = 0; i < 8; ++i) {
    const double phi = 2.0 * M_PI * i / 8;
    const Vec3 p(0.17 * std::cos(phi), 1.47, 0.09 * std::sin(phi));
    SkinEntry w{{kSpine3, 1.0}};
    if (p.x() > 0.08) w = {{kSpine3, 0.5}, {kLeftCollar, 0.5}};
    if (p.x() < -0.08) w = {{kSpine3, 0.5}, {kRightCollar, 0.5}};
    chest_ring.push_back(b.add(p, w));
  }
  b.bridge(pelvis_ring, spine1_ring);
  b.bridge(spine1_ring, spine2_ring);
  b.bridge(spine2_ring, spine3_ring);
  b.bridge(spine3_ring, chest_ring);
  contact_add(pelvis_ring);
  for (const auto* r : {&spine1_ring, &spine2_ring, &spine3_ring}) {
    for (int id : *r) {
      if (b.vertices[id].z() < -1e-9) contact.push_back(id);  // back
    }
  }

  // Neck and head.
  const auto neck_ring = b.ring({0, 1.50, 0}, 'y', 0.05, 0.05, 6, {{kNeck, 1.0}});
  const auto head_low = b.ring({0, 1.58, 0}, 'y', 0.08, 0.08, 6, {{kHead, 1.0}});
  const auto head_high = b.ring({0, 1.68, 0}, 'y', 0.085, 0.085, 6, {{kHead, 1.0}});
  const int head_top = b.add({0, 1.77, 0}, {{kHead, 1.0}});
  b.bridge(neck_ring, head_low);
  b.bridge(head_low, head_high);
  b.fan(head_high, head_top);

  struct Side {
    double sign;
    int hip, knee, ankle, foot, collar, shoulder, elbow, wrist, first_finger;
  };
  const Side sides[2] = {
      {1.0, kLeftHip, kLeftKnee, kLeftAnkle, kLeftFoot, kLeftCollar, kLeftShoulder, kLeftElbow, kLeftWrist, kLeftHandSlot},
      {-1.0, kRightHip, kRightKnee, kRightAnkle, kRightFoot, kRightCollar, kRightShoulder, kRightElbow, kRightWrist,
       kRightHandSlot},
  };
  std::vector<int> parents(kStateJoints);
  for (int j = 0; j <= kBodyJoints; ++j) parents[j] = kBodyParents[j];

  // Deferred regressor rows: (joint, vertex, weight).
  std::vector<std::tuple<int, int, double>> entries;
  auto mean_rows = [&](int joint, const std::vector<int>& ids, double weight) {
    for (int id : ids) entries.emplace_back(joint, id, weight / static_cast<double>(ids.size()));
  };

  for (const Side& s : sides) {
    const double x = s.sign;
    // Leg.
    const auto hip_ring = b.ring({x * 0.09, 0.88, 0}, 'y', 0.07, 0.07, 6, {{s.hip, 1.0}});
    const auto knee_ring = b.ring({x * 0.10, 0.50, 0.01}, 'y', 0.055, 0.055, 6, {{s.hip, 0.5}, {s.knee, 0.5}});
    const auto ankle_ring = b.ring({x * 0.10, 0.09, -0.01}, 'y', 0.045, 0.045, 6, {{s.ankle, 1.0}});
    b.bridge(hip_ring, knee_ring);
    b.bridge(knee_ring, ankle_ring);
    std::vector<int> foot;
    for (double fy : {0.0, 0.04}) {
      for (double fz : {-0.05, 0.19}) {
        for (double fx : {-0.04, 0.04}) foot.push_back(b.add({x * 0.10 + fx, fy, fz}, {{s.foot, 1.0}}));
      }
    }
    // Box faces: bottom, top, and four sides (vertex order y, z, x).
    const int quads[6][4] = {{0, 1, 3, 2}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
      b.faces.push_back({foot[q[0]], foot[q[1]], foot[q[2]]});
      b.faces.push_back({foot[q[0]], foot[q[2]], foot[q[3]]});
    }
    mean_rows(s.hip, hip_ring, 1.0);
    mean_rows(s.knee, knee_ring, 1.0);
    mean_rows(s.ankle, ankle_ring, 1.0);
    mean_rows(s.foot, foot, 1.0);
    contact_add(hip_ring);
    contact_add(knee_ring);
    contact_add(ankle_ring);
    contact_add(foot);

    // Arm along x.
    const auto shoulder_ring = b.ring({x * 0.20, 1.43, 0}, 'x', 0.05, 0.05, 6, {{s.shoulder, 1.0}});
    const auto elbow_ring = b.ring({x * 0.45, 1.43, 0}, 'x', 0.04, 0.04, 6, {{s.shoulder, 0.5}, {s.elbow, 0.5}});
    const auto wrist_ring = b.ring({x * 0.68, 1.43, 0}, 'x', 0.035, 0.035, 6, {{s.elbow, 0.5}, {s.wrist, 0.5}});
    b.bridge(shoulder_ring, elbow_ring);
    b.bridge(elbow_ring, wrist_ring);
    mean_rows(s.shoulder, shoulder_ring, 1.0);
    mean_rows(s.elbow, elbow_ring, 1.0);
    mean_rows(s.collar, chest_ring, 0.5);
    mean_rows(s.collar, shoulder_ring, 0.5);

    // Hand: a flat palm and one tip vertex per finger.
    const int p0 = b.add({x * 0.72, 1.43, 0.035}, {{s.wrist, 1.0}});
    const int p1 = b.add({x * 0.72, 1.43, -0.035}, {{s.wrist, 1.0}});
    const int p2 = b.add({x * 0.80, 1.43, 0.035}, {{s.wrist, 1.0}});
    const int p3 = b.add({x * 0.80, 1.43, -0.035}, {{s.wrist, 1.0}});
    b.faces.push_back({p0, p1, p2});
    b.faces.push_back({p1, p3, p2});
    mean_rows(s.wrist, {p0, p1, p2, p3}, 1.0);
    contact_add({p0, p1, p2, p3});

    // Finger order: index, middle, pinky, ring, thumb.
    const double finger_z[4] = {0.025, 0.008, -0.03, -0.012};
    for (int f = 0; f < 5; ++f) {
      const int first = s.first_finger + 3 * f;
      const int last = first + 2;
      parents[first] = s.wrist;
      parents[first + 1] = first;
      parents[first + 2] = first + 1;
      int tip;
      std::vector<std::pair<int, double>> base;
      if (f < 4) {
        tip = b.add({x * 0.87, 1.43, finger_z[f]}, {{last, 1.0}});
        const double w = (finger_z[f] + 0.035) / 0.07;
        base = {{p2, w}, {p3, 1.0 - w}};
        b.faces.push_back({tip, p2, p3});
      } else {
        tip = b.add({x * 0.79, 1.42, 0.08}, {{last, 1.0}});
        base = {{p0, 0.5}, {p2, 0.5}};
        b.faces.push_back({tip, p0, p2});
      }
      contact.push_back(tip);
      for (int i = 0; i < 3; ++i) {
        const double alpha = i / 3.0;
        for (const auto& [id, w] : base) entries.emplace_back(first + i, id, (1.0 - alpha) * w);
        entries.emplace_back(first + i, tip, alpha);
      }
    }
  }

  mean_rows(kPelvis, pelvis_ring, 1.0);
  mean_rows(kSpine1, spine1_ring, 1.0);
  mean_rows(kSpine2, spine2_ring, 1.0);
  mean_rows(kSpine3, spine3_ring, 1.0);
  mean_rows(kNeck, neck_ring, 1.0);
  mean_rows(kHead, concat(head_low, head_high), 1.0);

  const int V = static_cast<int>(b.vertices.size());
  BodyModel m;
  m.template_vertices.resize(V, 3);
  for (int v = 0; v < V; ++v) m.template_vertices.row(v) = b.vertices[v].transpose();
  m.joint_regressor = RowMatrix::Zero(kStateJoints, V);
  for (const auto& [j, v, w] : entries) m.joint_regressor(j, v) += w;
  m.skin_weights = RowMatrix::Zero(V, kStateJoints);
  for (int v = 0; v < V; ++v) {
    for (const auto& [j, w] : b.skin[v]) m.skin_weights(v, j) += w;
  }
  m.parents = parents;
  m.faces = b.faces;
  m.contact_vertex_ids = contact;

  Rng rng(options.seed ^ 0x5eedb0d1ULL);
  m.shape_dirs.resize(kShapeDim, 3 * V);
  const Vec3 center(0.0, 0.9, 0.0);
  for (int k = 0; k < kShapeDim; ++k) {
    if (k == 0 && options.template_in_shape_span) {
      m.shape_dirs.row(0) = 0.1 * Eigen::Map<const VecX>(m.template_vertices.data(), 3 * V).transpose();
      continue;
    }
    Mat3 A;
    for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = 0.03 * rng.normal();
    for (int v = 0; v < V; ++v) {
      const Vec3 d = A * (b.vertices[v] - center);
      for (int c = 0; c < 3; ++c) m.shape_dirs(k, 3 * v + c) = d[c] + 0.002 * rng.normal();
    }
  }
  m.surface_probe_ids = farthest_point_sample(m.template_vertices, kSurfaceProbes);
  m.head_joint = kHead;
  m.finalize();
  return m;
}

CameraIntrinsics default_intrinsics() { return {500.0, 500.0, 320.0, 240.0, 640, 480}; }

Points3 floor_points(double height, double x_min, double x_max, double z_min, double z_max, double spacing) {
  const int nx = static_cast<int>(std::floor((x_max - x_min) / spacing + 1e-9)) + 1;
  const int nz = static_cast<int>(std::floor((z_max - z_min) / spacing + 1e-9)) + 1;
  Points3 p(nx * nz, 3);
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < nz; ++k) p.row(i * nz + k) << x_min + i * spacing, height, z_min + k * spacing;
  }
  return p;
}

namespace {

// Rectangle in the plane z = depth spanning x and y ranges.
Points3 wall_points(double depth, double x_min, double x_max, double y_min, double y_max, double spacing) {
  const int nx = static_cast<int>(std::floor((x_max - x_min) / spacing + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor((y_max - y_min) / spacing + 1e-9)) + 1;
  Points3 p(nx * ny, 3);
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < ny; ++k) p.row(i * ny + k) << x_min + i * spacing, y_min + k * spacing, depth;
  }
  return p;
}

ScenePointCloud assemble(const std::vector<std::pair<Points3, Vec3>>& parts) {
  Eigen::Index n = 0;
  for (const auto& part : parts) n += part.first.rows();
  Points3 points(n, 3), normals(n, 3);
  Eigen::Index row = 0;
  for (const auto& [p, normal] : parts) {
    points.middleRows(row, p.rows()) = p;
    normals.middleRows(row, p.rows()).rowwise() = normal.transpose();
    row += p.rows();
  }
  return ScenePointCloud(std::move(points), std::move(normals));
}

std::vector<std::pair<Points3, Vec3>> room_parts(bool wall) {
  std::vector<std::pair<Points3, Vec3>> parts;
  parts.emplace_back(floor_points(kFloorY, -2.0, 2.0, 1.0, 6.0, 0.05), Vec3(0, -1, 0));
  if (wall) parts.emplace_back(wall_points(6.0, -2.0, 2.0, -1.5, kFloorY - 0.05, 0.05), Vec3(0, 0, -1));
  return parts;
}

HumanState place_on_floor(const BodyModel& model, HumanState s, double x, double depth) {
  s.translation.setZero();
  const PosedMesh mesh = forward(model, s);
  const double lowest = mesh.vertices.col(1).maxCoeff();
  s.translation = Vec3(x - mesh.joints(0, 0), kFloorY - lowest, depth - mesh.joints(0, 2));
  return s;
}

}  // namespace

ScenePointCloud make_room(bool wall) { return assemble(room_parts(wall)); }

HumanState standing_state(const BodyModel& model, double x, double depth, double yaw) {
  HumanState s = HumanState::identity();
  s.global_orient() = matrix_to_rot6d(rot_y(yaw) * rot_x(M_PI));
  return place_on_floor(model, s, x, depth);
}

HumanState seated_state(const BodyModel& model, double x, double depth) {
  HumanState s = HumanState::identity();
  s.global_orient() = matrix_to_rot6d(rot_x(M_PI));
  for (int hip : {kLeftHip, kRightHip}) s.body_pose(hip - 1) = matrix_to_rot6d(rot_x(-M_PI / 2));
  for (int knee : {kLeftKnee, kRightKnee}) s.body_pose(knee - 1) = matrix_to_rot6d(rot_x(M_PI / 2));
  return place_on_floor(model, s, x, depth);
}

SyntheticScenario synthesize_scenario(const ScenarioOptions& options) {
  SyntheticScenario sc;
  sc.model = make_toy_model();
  sc.intrinsics = default_intrinsics();
  Rng rng(options.seed);
  auto parts = room_parts(options.wall);
  if (options.placement == Placement::Standing) {
    const double x = rng.uniform(-0.3, 0.3);
    const double depth = rng.uniform(2.8, 3.4);
    const double yaw = rng.uniform(-0.3, 0.3);
    sc.gt = standing_state(sc.model, x, depth, yaw);
  } else {
    const double x = rng.uniform(-0.3, 0.3);
    const double depth = rng.uniform(2.8, 3.4);
    sc.gt = seated_state(sc.model, x, depth);
    // A box under the thighs, its top touching the lowest seat vertex.
    const PosedMesh mesh = forward(sc.model, sc.gt);
    double top = -1e9;
    for (int v = 0; v < sc.model.num_vertices(); ++v) {
      const double skin_hip = sc.model.skin_weights(v, kLeftHip) + sc.model.skin_weights(v, kRightHip) +
                              sc.model.skin_weights(v, kPelvis);
      if (skin_hip >= 0.5 && sc.model.skin_weights(v, kLeftKnee) + sc.model.skin_weights(v, kRightKnee) == 0.0) {
        top = std::max(top, mesh.vertices(v, 1));
      }
    }
    const double knee_z = std::min(mesh.joints(kLeftKnee, 2), mesh.joints(kRightKnee, 2));
    const double root_z = mesh.joints(kPelvis, 2);
    const double root_x = mesh.joints(kPelvis, 0);
    const double front = knee_z + 0.1;
    parts.emplace_back(floor_points(top, root_x - 0.3, root_x + 0.3, front, root_z + 0.2, 0.03), Vec3(0, -1, 0));
    parts.emplace_back(wall_points(front, root_x - 0.3, root_x + 0.3, top + 0.03, kFloorY - 0.03, 0.03), Vec3(0, 0, -1));
  }
  sc.scene = assemble(parts);
  if (options.difficulty > 0.0) {
    PerturbationSpec spec = PerturbationSpec{}.scaled(options.difficulty);
    spec.clean_probability = 0.0;
    sc.init = sample_query(sc.gt, spec, rng);
  } else {
    sc.init = sc.gt;
  }
  return sc;
}

FeatureGrids random_feature_grids(const ArchConfig& arch, const CameraIntrinsics& intrinsics, double patch_size,
                                  uint64_t seed) {
  FeatureGrids g;
  g.patch_size = patch_size;
  g.intrinsics = intrinsics;
  const int rows = static_cast<int>(std::ceil(intrinsics.height / patch_size));
  const int cols = static_cast<int>(std::ceil(intrinsics.width / patch_size));
  Rng rng(seed);
  for (int s = 0; s < kStreams; ++s) {
    for (int l = 0; l < kFeatureLevels; ++l) {
      FeatureGrid& grid = g.levels[s][l];
      grid.height = rows;
      grid.width = cols;
      grid.channels = arch.level_channels[l];
      grid.values.resize(static_cast<size_t>(rows) * cols * grid.channels);
      for (double& v : grid.values) v = rng.normal();
    }
  }
  return g;
}

}  // namespace graft
