// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/scene.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

namespace graft {

ScenePointCloud::ScenePointCloud(Points3 points, Points3 normals, Vec3 camera_origin)
    : points_(std::move(points)), normals_(std::move(normals)), camera_origin_(std::move(camera_origin)) {
  if (points_.rows() == 0) fail(ErrorCode::EmptyCloud, "scene point cloud is empty");
  if (normals_.rows() != points_.rows()) fail(ErrorCode::DimensionMismatch, "one normal per point is required");
  if (!points_.allFinite() || !normals_.allFinite()) fail(ErrorCode::FormatError, "scene contains non-finite values");
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    const double n = normals_.row(i).norm();
    if (!(n > 1e-12)) fail(ErrorCode::FormatError, "scene normal " + std::to_string(i) + " has zero length");
    normals_.row(i) /= n;
    const Vec3 to_camera = camera_origin_ - points_.row(i).transpose();
    if (normals_.row(i).dot(to_camera) < 0.0) normals_.row(i) *= -1.0;
  }
}

ScenePointCloud ScenePointCloud::downsampled(int max_points) const {
  if (max_points <= 0 || size() <= max_points) return *this;
  const int stride = (size() + max_points - 1) / max_points;
  const int kept = (size() + stride - 1) / stride;
  Points3 p(kept, 3), n(kept, 3);
  for (int i = 0; i < kept; ++i) {
    p.row(i) = points_.row(i * stride);
    n.row(i) = normals_.row(i * stride);
  }
  return ScenePointCloud(std::move(p), std::move(n), camera_origin_);
}

SpatialIndex::SpatialIndex(ScenePointCloud cloud) : cloud_(std::move(cloud)) {
  if (cloud_.size() == 0) fail(ErrorCode::EmptyCloud, "cannot index an empty cloud");
  order_.resize(cloud_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * (cloud_.size() / kLeafSize + 1));
  build(0, cloud_.size());
}

int SpatialIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  const Points3& pts = cloud_.points();
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(pts.row(order_[i]).transpose());
    hi = hi.cwiseMax(pts.row(order_[i]).transpose());
  }
  nodes_.push_back(Node{begin, end, lo, hi});
  if (end - begin <= kLeafSize) return id;

  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    const double va = pts(a, axis), vb = pts(b, axis);
    return va < vb || (va == vb && a < b);
  });
  const double split = pts(order_[mid], axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

namespace {

inline double squared_distance(const Points3& pts, int i, const Vec3& q) {
  const double dx = pts(i, 0) - q.x();
  const double dy = pts(i, 1) - q.y();
  const double dz = pts(i, 2) - q.z();
  return dx * dx + dy * dy + dz * dz;
}

inline bool closer(double d2, int id, double best_d2, int best_id) {
  return d2 < best_d2 || (d2 == best_d2 && id < best_id);
}

}  // namespace

double SpatialIndex::box_distance2(const Node& node, const Vec3& q) {
  const Vec3 d = (node.lo - q).cwiseMax(q - node.hi).cwiseMax(0.0);
  return d.squaredNorm();
}

void SpatialIndex::push_children(const Node& node, const Vec3& query, std::vector<Visit>& stack) const {
  const bool left_first = query[node.axis] <= node.split;
  const int near = left_first ? node.left : node.right;
  const int far = left_first ? node.right : node.left;
  stack.push_back({far, box_distance2(nodes_[far], query)});
  stack.push_back({near, box_distance2(nodes_[near], query)});
}

NearestResult SpatialIndex::nearest(const Vec3& query) const {
  const Points3& pts = cloud_.points();
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_id = std::numeric_limits<int>::max();

  // Every node stores the bounding box of its points. A subtree is skipped only
  // when the box is strictly farther than the current best, so equal-distance
  // candidates are still visited for the index tie-break.
  std::vector<Visit> stack;
  stack.push_back({0, 0.0});
  while (!stack.empty()) {
    const Visit visit = stack.back();
    stack.pop_back();
    if (visit.bound > best_d2) continue;
    const Node& node = nodes_[visit.node];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int pid = order_[i];
        const double d2 = squared_distance(pts, pid, query);
        if (closer(d2, pid, best_d2, best_id)) {
          best_d2 = d2;
          best_id = pid;
        }
      }
      continue;
    }
    push_children(node, query, stack);
  }

  NearestResult r;
  r.point_id = best_id;
  r.point = pts.row(best_id).transpose();
  r.normal = cloud_.normals().row(best_id).transpose();
  r.distance = std::sqrt(best_d2);
  return r;
}

std::vector<int> SpatialIndex::k_nearest(const Vec3& query, int k) const {
  k = std::min(k, cloud_.size());
  if (k <= 0) return {};
  const Points3& pts = cloud_.points();
  using Entry = std::pair<double, int>;  // max-heap on (d2, id)
  std::priority_queue<Entry> heap;
  auto worst = [&]() { return heap.size() < static_cast<size_t>(k) ? std::numeric_limits<double>::infinity() : heap.top().first; };

  std::vector<Visit> stack;
  stack.push_back({0, 0.0});
  while (!stack.empty()) {
    const Visit visit = stack.back();
    stack.pop_back();
    if (visit.bound > worst()) continue;
    const Node& node = nodes_[visit.node];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int pid = order_[i];
        const Entry e{squared_distance(pts, pid, query), pid};
        if (heap.size() < static_cast<size_t>(k)) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      continue;
    }
    push_children(node, query, stack);
  }
  std::vector<int> ids(heap.size());
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    *it = heap.top().second;
    heap.pop();
  }
  return ids;
}

NearestResult SceneQuery::nearest(const Vec3& query) const {
  if (scale_ == 1.0) return index_->nearest(query);
  NearestResult r = index_->nearest(query / scale_);
  r.point *= scale_;
  r.distance = (r.point - query).norm();
  return r;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0 && fy > 0)) fail(ErrorCode::FormatError, "focal lengths must be positive");
  if (width <= 0 || height <= 0) fail(ErrorCode::FormatError, "image size must be positive");
  if (!(cx >= 0 && cx < width && cy >= 0 && cy < height)) {
    fail(ErrorCode::FormatError, "principal point must lie inside the image");
  }
}

std::optional<Eigen::Vector2d> project(const CameraIntrinsics& k, const Vec3& p) {
  if (!(p.z() > 1e-6)) return std::nullopt;
  return Eigen::Vector2d(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
}

Vec3 unproject(const CameraIntrinsics& k, const Eigen::Vector2d& pixel, double depth) {
  return Vec3((pixel.x() - k.cx) / k.fx * depth, (pixel.y() - k.cy) / k.fy * depth, depth);
}

Points3 estimate_normals(const Points3& points, int k, const Vec3& camera_origin) {
  const int n = static_cast<int>(points.rows());
  if (k < 3 || n < k) fail(ErrorCode::TooFewPoints, "normal estimation needs N >= k >= 3");
  // Placeholder normals for indexing only; the index is used for k-NN queries.
  Points3 up = Points3::Zero(n, 3);
  up.col(2).setOnes();
  const SpatialIndex index(ScenePointCloud(points, up, camera_origin));

  Points3 normals(n, 3);
  for (int i = 0; i < n; ++i) {
    const Vec3 p = points.row(i).transpose();
    const auto ids = index.k_nearest(p, k);
    Vec3 mean = Vec3::Zero();
    for (int id : ids) mean += points.row(id).transpose();
    mean /= static_cast<double>(ids.size());
    Mat3 cov = Mat3::Zero();
    for (int id : ids) {
      const Vec3 d = points.row(id).transpose() - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 normal = eig.eigenvectors().col(0).normalized();
    if (normal.dot(camera_origin - p) < 0.0) normal = -normal;
    normals.row(i) = normal.transpose();
  }
  return normals;
}

}  // namespace graft
