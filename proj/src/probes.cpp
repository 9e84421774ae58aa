// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/probes.hpp"

#include <cmath>

namespace graft {

ProbeRecord probe(const SceneQuery& scene, const Vec3& anchor, const Mat3& body_rotation, const Vec3& root) {
  const NearestResult nn = scene.nearest(anchor);
  ProbeRecord r;
  r.anchor = anchor;
  r.nearest = nn.point;
  r.offset = nn.point - anchor;
  r.normal = nn.normal;
  r.body_relative = body_rotation.transpose() * (anchor - root);
  r.point_id = nn.point_id;
  return r;
}

TokenProbes compute_probes(const BodyModel& model, const PosedMesh& mesh, const SceneQuery& scene) {
  const Mat3& R = mesh.joint_rotations[0];
  const Vec3 root = mesh.joints.row(0).transpose();
  TokenProbes out;
  for (int k = 0; k < kBodyJoints; ++k) {
    const Vec3 anchor = mesh.joints.row(model.state_joint_map[1 + k]).transpose();
    out.probes[k].push_back(probe(scene, anchor, R, root));
    out.visual_anchors[k].push_back(anchor);
  }
  const int hand_slots[2] = {kLeftHandSlot, kRightHandSlot};
  for (int h = 0; h < 2; ++h) {
    const int token = kLeftHandToken + h;
    const auto distal = model.distal_joints(hand_slots[h]);
    if (static_cast<int>(distal.size()) != kHandProbes) {
      fail(ErrorCode::InvalidModel, "each hand chain needs exactly 5 distal joints");
    }
    Vec3 mean = Vec3::Zero();
    for (int j : distal) {
      const Vec3 anchor = mesh.joints.row(j).transpose();
      out.probes[token].push_back(probe(scene, anchor, R, root));
      mean += anchor;
    }
    out.visual_anchors[token].push_back(mean / kHandProbes);
  }
  for (int v : model.surface_probe_ids) {
    const Vec3 anchor = mesh.vertices.row(v).transpose();
    out.probes[kFullBodyToken].push_back(probe(scene, anchor, R, root));
    out.visual_anchors[kFullBodyToken].push_back(anchor);
  }
  return out;
}

VecX fourier_encode(const RowMatrix& frequencies, const Vec3& p) {
  const Eigen::Index f = frequencies.rows();
  const VecX bp = frequencies * p;
  VecX out(2 * f + 3);
  out.head(f) = bp.array().sin().matrix();
  out.segment(f, f) = bp.array().cos().matrix();
  out.tail<3>() = p;
  return out;
}

VecX encode_probe(const Weights& w, const ProbeRecord& r) {
  const int d = w.arch.fourier_dim();
  VecX out(3 * d);
  out.segment(0, d) = fourier_encode(w.fourier_offset, r.offset);
  out.segment(d, d) = fourier_encode(w.fourier_normal, r.normal);
  out.segment(2 * d, d) = fourier_encode(w.fourier_position, r.body_relative);
  return out;
}

namespace {

VecX compressed_probes(const Weights& w, const std::vector<ProbeRecord>& records) {
  RowMatrix encodings(static_cast<Eigen::Index>(records.size()), w.arch.probe_encoding_dim());
  for (size_t i = 0; i < records.size(); ++i) encodings.row(i) = encode_probe(w, records[i]).transpose();
  const RowMatrix compressed = w.probe_mlp(encodings);  // rows stay contiguous in row-major order
  return Eigen::Map<const VecX>(compressed.data(), compressed.size());
}

}  // namespace

RowMatrix tokenize(const Weights& w, const HumanState& state, const TokenProbes& probes) {
  if (static_cast<int>(w.tokenizers.size()) != kNumTokens) {
    fail(ErrorCode::WeightShapeMismatch, "weights need one tokenizer per token");
  }
  RowMatrix tokens(kNumTokens, w.arch.width);
  auto lift = [&](int k, const VecX& input) {
    if (input.size() != w.tokenizers[k].fc1.in()) {
      fail(ErrorCode::WeightShapeMismatch, "tokenizer " + std::to_string(k) + " input width mismatch");
    }
    tokens.row(k) = w.tokenizers[k](RowMatrix(input.transpose()));
  };

  for (int k = 0; k < kBodyJoints; ++k) {
    if (probes.probes[k].size() != 1) fail(ErrorCode::ShapeMismatch, "body tokens carry one probe");
    VecX input(w.arch.probe_encoding_dim() + 6);
    input << encode_probe(w, probes.probes[k][0]), state.body_pose(k);
    lift(k, input);
  }
  const int hand_slots[2] = {kLeftHandSlot, kRightHandSlot};
  for (int h = 0; h < 2; ++h) {
    const int token = kLeftHandToken + h;
    if (probes.probes[token].size() != kHandProbes) fail(ErrorCode::ShapeMismatch, "hand tokens carry five probes");
    const VecX compressed = compressed_probes(w, probes.probes[token]);
    VecX input(compressed.size() + 6 * kHandJoints);
    input.head(compressed.size()) = compressed;
    for (int j = 0; j < kHandJoints; ++j) input.segment(compressed.size() + 6 * j, 6) = state.rotations[hand_slots[h] + j];
    lift(token, input);
  }
  if (probes.probes[kFullBodyToken].size() != kSurfaceProbes) {
    fail(ErrorCode::ShapeMismatch, "the full-body token carries 27 probes");
  }
  const VecX compressed = compressed_probes(w, probes.probes[kFullBodyToken]);
  VecX input(compressed.size() + 6 + 3 + kShapeDim);
  input << compressed, state.global_orient(), state.translation, state.shape;
  lift(kFullBodyToken, input);
  return tokens;
}

void FeatureGrids::validate(const ArchConfig* arch) const {
  const FeatureGrid& ref = levels[0][0];
  if (ref.height <= 0 || ref.width <= 0) fail(ErrorCode::GridShapeMismatch, "feature grid is empty");
  for (int s = 0; s < kStreams; ++s) {
    for (int l = 0; l < kFeatureLevels; ++l) {
      const FeatureGrid& g = levels[s][l];
      if (g.height != ref.height || g.width != ref.width) {
        fail(ErrorCode::GridShapeMismatch, "feature levels and streams must share one grid resolution");
      }
      if (g.values.size() != static_cast<size_t>(g.height) * g.width * g.channels) {
        fail(ErrorCode::GridShapeMismatch, "feature grid payload does not match its shape");
      }
      if (g.channels != levels[0][l].channels) fail(ErrorCode::GridShapeMismatch, "streams disagree on level width");
      if (arch && g.channels != arch->level_channels[l]) {
        fail(ErrorCode::GridShapeMismatch, "feature level " + std::to_string(l) + " width does not match the weights");
      }
    }
  }
  if (!(patch_size > 0)) fail(ErrorCode::GridShapeMismatch, "patch size must be positive");
}

namespace {

std::string grid_name(int stream, int level) {
  return std::string(stream == 0 ? "streams" : "streamh") + "_level" + std::to_string(level);
}

}  // namespace

TensorContainer FeatureGrids::to_container() const {
  TensorContainer c;
  for (int s = 0; s < kStreams; ++s) {
    for (int l = 0; l < kFeatureLevels; ++l) {
      const FeatureGrid& g = levels[s][l];
      c.add(Tensor::make_f32(grid_name(s, l),
                             {static_cast<uint64_t>(g.height), static_cast<uint64_t>(g.width),
                              static_cast<uint64_t>(g.channels)},
                             std::vector<float>(g.values.begin(), g.values.end())));
    }
  }
  c.add(Tensor::make_f64("patch_size", {1}, {patch_size}));
  c.add(Tensor::make_f64("intrinsics", {6},
                         {intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy,
                          static_cast<double>(intrinsics.width), static_cast<double>(intrinsics.height)}));
  return c;
}

FeatureGrids FeatureGrids::from_container(const TensorContainer& c) {
  FeatureGrids grids;
  for (int s = 0; s < kStreams; ++s) {
    for (int l = 0; l < kFeatureLevels; ++l) {
      const Tensor& t = c.get(grid_name(s, l));
      if (t.dims.size() != 3) fail(ErrorCode::GridShapeMismatch, t.name + " must be H x W x C");
      FeatureGrid& g = grids.levels[s][l];
      g.height = static_cast<int>(t.dims[0]);
      g.width = static_cast<int>(t.dims[1]);
      g.channels = static_cast<int>(t.dims[2]);
      g.values = t.to_f64();
    }
  }
  const Tensor& patch = c.get("patch_size");
  if (patch.element_count() != 1) fail(ErrorCode::GridShapeMismatch, "patch_size must be a scalar");
  grids.patch_size = patch.dtype() == DType::I64 ? static_cast<double>(patch.i64()[0]) : patch.to_f64()[0];
  const Tensor& k = c.get("intrinsics");
  if (k.element_count() != 6) fail(ErrorCode::FormatError, "intrinsics must hold fx, fy, cx, cy, width, height");
  const auto kv = k.to_f64();
  grids.intrinsics = {kv[0], kv[1], kv[2], kv[3], static_cast<int>(kv[4]), static_cast<int>(kv[5])};
  grids.intrinsics.validate();
  grids.validate();
  return grids;
}

FeatureGrids FeatureGrids::load(const std::filesystem::path& path) {
  return from_container(TensorContainer::load(path));
}

int context_size(int token) { return kStreams * (token == kFullBodyToken ? kSurfaceProbes : 9); }

std::vector<RowMatrix> sample_context(const Weights& w, const FeatureGrids& grids, const TokenProbes& probes) {
  grids.validate(&w.arch);
  const int rows = grids.levels[0][0].height;
  const int cols = grids.levels[0][0].width;

  auto cell_feature = [&](int stream, int r, int c) {
    RowMatrix fused(1, kFeatureLevels * w.arch.level_dim);
    for (int l = 0; l < kFeatureLevels; ++l) {
      const FeatureGrid& g = grids.levels[stream][l];
      const RowMatrix x = Eigen::Map<const RowMatrix>(g.cell(r, c), 1, g.channels);
      fused.middleCols(l * w.arch.level_dim, w.arch.level_dim) = w.level_proj[l](x);
    }
    RowMatrix out = w.fuse(fused);
    out += w.stream_embedding.row(stream);
    return out;
  };

  std::vector<RowMatrix> context;
  context.reserve(kNumTokens);
  for (int k = 0; k < kNumTokens; ++k) {
    const int radius = k == kFullBodyToken ? 0 : 1;
    const int side = 2 * radius + 1;
    const auto& anchors = probes.visual_anchors[k];
    RowMatrix ctx = RowMatrix::Zero(static_cast<Eigen::Index>(kStreams * anchors.size() * side * side), w.arch.width);
    if (ctx.rows() != context_size(k)) fail(ErrorCode::ShapeMismatch, "unexpected visual anchor count");
    int row = 0;
    for (int s = 0; s < kStreams; ++s) {
      for (const Vec3& a : anchors) {
        const auto uv = project(grids.intrinsics, a);
        const bool visible = uv && grids.intrinsics.contains(uv->x(), uv->y());
        const int cr = visible ? static_cast<int>(std::floor(uv->y() / grids.patch_size)) : 0;
        const int cc = visible ? static_cast<int>(std::floor(uv->x() / grids.patch_size)) : 0;
        for (int dr = -radius; dr <= radius; ++dr) {
          for (int dc = -radius; dc <= radius; ++dc, ++row) {
            const int r = cr + dr;
            const int c = cc + dc;
            if (!visible || r < 0 || c < 0 || r >= rows || c >= cols) continue;
            ctx.row(row) = cell_feature(s, r, c);
          }
        }
      }
    }
    context.push_back(std::move(ctx));
  }
  return context;
}

}  // namespace graft
