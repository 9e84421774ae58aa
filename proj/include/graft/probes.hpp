// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/body_model.hpp"
#include "graft/scene.hpp"
#include "graft/tensor_container.hpp"
#include "graft/weights.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace graft {

struct ProbeRecord {
  Vec3 anchor;
  Vec3 nearest;
  Vec3 offset;  // nearest - anchor
  Vec3 normal;
  Vec3 body_relative;
  int point_id = -1;
};

/// Nearest-point probe at `anchor`. `body_rotation` and `root` define the
/// body frame: body_relative = body_rotation^T (anchor - root).
ProbeRecord probe(const SceneQuery& scene, const Vec3& anchor, const Mat3& body_rotation, const Vec3& root);

/// Probes and visual anchors of the 24 tokens for one posed human.
struct TokenProbes {
  std::array<std::vector<ProbeRecord>, kNumTokens> probes;   // 1 / 5 / 27 per token
  std::array<std::vector<Vec3>, kNumTokens> visual_anchors;  // 1 / 1 / 27 per token
};

TokenProbes compute_probes(const BodyModel& model, const PosedMesh& mesh, const SceneQuery& scene);

/// [sin(B p); cos(B p); p].
VecX fourier_encode(const RowMatrix& frequencies, const Vec3& p);

/// Concatenated offset, normal and body-relative encodings of one probe.
VecX encode_probe(const Weights& weights, const ProbeRecord& record);

/// Token embeddings, one row per token.
RowMatrix tokenize(const Weights& weights, const HumanState& state, const TokenProbes& probes);

/// Dense per-stream, per-level feature maps on the image token grid.
struct FeatureGrid {
  int height = 0, width = 0, channels = 0;
  std::vector<double> values;  // height x width x channels

  const double* cell(int row, int col) const { return values.data() + (static_cast<size_t>(row) * width + col) * channels; }
};

struct FeatureGrids {
  std::array<std::array<FeatureGrid, kFeatureLevels>, kStreams> levels;  // [stream][level]
  double patch_size = 14.0;  // pixels per grid cell
  CameraIntrinsics intrinsics;

  /// Throws GridShapeMismatch when levels disagree in resolution or when
  /// `arch` is given and a level width differs from it.
  void validate(const ArchConfig* arch = nullptr) const;

  TensorContainer to_container() const;
  static FeatureGrids from_container(const TensorContainer& container);
  static FeatureGrids load(const std::filesystem::path& path);
};

/// Number of context rows attached to token k.
int context_size(int token);

/// Cross-attention context per token: for each stream, a 3x3 cell
/// neighbourhood around body/hand anchors and one cell per surface anchor.
/// Anchors behind the camera or outside the image, and cells outside the grid,
/// give zero rows.
std::vector<RowMatrix> sample_context(const Weights& weights, const FeatureGrids& grids, const TokenProbes& probes);

}  // namespace graft
