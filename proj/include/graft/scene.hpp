// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/common.hpp"

#include <optional>
#include <vector>

namespace graft {

/// Metric point cloud in the camera frame with unit normals facing the camera.
class ScenePointCloud {
 public:
  ScenePointCloud() = default;
  /// Normalizes `normals` and flips any that face away from `camera_origin`.
  /// Throws EmptyCloud / DimensionMismatch / FormatError on bad input.
  ScenePointCloud(Points3 points, Points3 normals, Vec3 camera_origin = Vec3::Zero());

  const Points3& points() const { return points_; }
  const Points3& normals() const { return normals_; }
  const Vec3& camera_origin() const { return camera_origin_; }
  int size() const { return static_cast<int>(points_.rows()); }

  /// Keeps every k-th point so that at most `max_points` remain.
  ScenePointCloud downsampled(int max_points) const;

 private:
  Points3 points_;
  Points3 normals_;
  Vec3 camera_origin_ = Vec3::Zero();
};

struct NearestResult {
  Vec3 point;
  Vec3 normal;
  double distance = 0.0;
  int point_id = -1;
};

/// Exact nearest-neighbour index: a median-split kd-tree with leaf size 16.
/// Ties are broken towards the lowest point index.
class SpatialIndex {
 public:
  explicit SpatialIndex(ScenePointCloud cloud);

  const ScenePointCloud& cloud() const { return cloud_; }

  NearestResult nearest(const Vec3& query) const;
  /// The k nearest point ids ordered by (distance, index).
  std::vector<int> k_nearest(const Vec3& query, int k) const;

  static constexpr int kLeafSize = 16;

 private:
  struct Node {
    int begin = 0;
    int end = 0;
    Vec3 lo, hi;  // bounding box of the node's points
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  struct Visit {
    int node = 0;
    double bound = 0.0;  // squared distance from the query to the node's box
  };

  int build(int begin, int end);
  static double box_distance2(const Node& node, const Vec3& query);
  void push_children(const Node& node, const Vec3& query, std::vector<Visit>& stack) const;

  ScenePointCloud cloud_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

/// Nearest-point queries against an index, optionally viewed through a uniform
/// scale of the whole scene about the camera origin.
class SceneQuery {
 public:
  explicit SceneQuery(const SpatialIndex& index, double scale = 1.0) : index_(&index), scale_(scale) {}

  NearestResult nearest(const Vec3& query) const;
  double scale() const { return scale_; }
  const SpatialIndex& index() const { return *index_; }

 private:
  const SpatialIndex* index_;
  double scale_;
};

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  /// Throws FormatError when focal lengths are not positive or the
  /// principal point lies outside the image.
  void validate() const;
  bool contains(double u, double v) const { return u >= 0 && v >= 0 && u < width && v < height; }
};

/// Pixel coordinates, or nullopt when the point is behind the camera.
std::optional<Eigen::Vector2d> project(const CameraIntrinsics& intrinsics, const Vec3& p);
Vec3 unproject(const CameraIntrinsics& intrinsics, const Eigen::Vector2d& pixel, double depth);

/// Per-point normals from the smallest-eigenvalue eigenvector of the k-NN
/// covariance, oriented towards `camera_origin`.
Points3 estimate_normals(const Points3& points, int k, const Vec3& camera_origin = Vec3::Zero());

inline constexpr int kDefaultNormalNeighbors = 16;

}  // namespace graft
