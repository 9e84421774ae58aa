// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/nn.hpp"
#include "graft/probes.hpp"
#include "graft/synthetic.hpp"
#include "graft/transformer.hpp"
#include "graft/weights.hpp"
#include "test_util.hpp"

#include <cmath>

namespace graft {
namespace {

RowMatrix random_matrix(Rng& rng, int rows, int cols) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

std::vector<RowMatrix> random_context(Rng& rng, int width) {
  std::vector<RowMatrix> c;
  for (int k = 0; k < kNumTokens; ++k) c.push_back(random_matrix(rng, context_size(k), width));
  return c;
}

TEST(Nn, GeluExactValues) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(gelu(-1.0), -0.15865525393145707, 1e-15);
  EXPECT_NEAR(gelu(3.0), 2.9959503059051098, 1e-14);  // 3 * Phi(3)
}

TEST(Nn, SoftmaxRowsSumToOne) {
  Rng rng(41);
  RowMatrix x = 30.0 * random_matrix(rng, 7, 11);
  x(0, 0) = 800.0;  // would overflow without max subtraction
  const RowMatrix p = softmax_rows(x);
  for (int r = 0; r < p.rows(); ++r) {
    EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-14);
    EXPECT_TRUE((p.row(r).array() >= 0).all());
  }
  EXPECT_NEAR(p(0, 0), 1.0, 1e-14);
}

TEST(Nn, LayerNormNormalizesRows) {
  Rng rng(42);
  LayerNorm n(16);
  const RowMatrix y = n(5.0 * random_matrix(rng, 4, 16).array() + 3.0);
  for (int r = 0; r < 4; ++r) {
    EXPECT_NEAR(y.row(r).mean(), 0.0, 1e-12);
    const double var = y.row(r).squaredNorm() / 16.0;
    EXPECT_NEAR(var, 1.0, 1e-5);
  }
  EXPECT_GRAFT_ERROR(n(RowMatrix::Zero(2, 15)), ErrorCode::ShapeMismatch);
}

TEST(Nn, AttentionMatchesPerHeadLoops) {
  Rng rng(43);
  const int dim = 12, heads = 3, dh = 4;
  Attention a(dim);
  for (Linear* l : {&a.q, &a.k, &a.v, &a.o}) {
    l->weight = 0.3 * random_matrix(rng, dim, dim);
    l->bias = VecX::NullaryExpr(dim, [&] { return rng.normal(); });
  }
  const RowMatrix qx = random_matrix(rng, 5, dim), kvx = random_matrix(rng, 7, dim);
  RowMatrix probs;
  const RowMatrix out = a(qx, kvx, heads, &probs);

  auto lin = [](const Linear& l, const RowMatrix& x) {
    RowMatrix y(x.rows(), l.out());
    for (int r = 0; r < x.rows(); ++r) {
      for (int o = 0; o < l.out(); ++o) {
        double acc = l.bias[o];
        for (int i = 0; i < l.in(); ++i) acc += l.weight(o, i) * x(r, i);
        y(r, o) = acc;
      }
    }
    return y;
  };
  const RowMatrix Q = lin(a.q, qx), K = lin(a.k, kvx), V = lin(a.v, kvx);
  RowMatrix mixed = RowMatrix::Zero(5, dim);
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < 5; ++i) {
      std::vector<double> s(7);
      double mx = -INFINITY;
      for (int j = 0; j < 7; ++j) {
        s[j] = 0;
        for (int d = 0; d < dh; ++d) s[j] += Q(i, h * dh + d) * K(j, h * dh + d);
        s[j] /= std::sqrt(double(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (double& v : s) z += (v = std::exp(v - mx));
      for (int j = 0; j < 7; ++j) {
        EXPECT_NEAR(probs(h * 5 + i, j), s[j] / z, 1e-14);
        for (int d = 0; d < dh; ++d) mixed(i, h * dh + d) += s[j] / z * V(j, h * dh + d);
      }
    }
  }
  EXPECT_LT((out - lin(a.o, mixed)).cwiseAbs().maxCoeff(), 1e-12);
  for (int r = 0; r < probs.rows(); ++r) EXPECT_NEAR(probs.row(r).sum(), 1.0, 1e-14);
  EXPECT_GRAFT_ERROR(a(qx, kvx, 5), ErrorCode::ShapeMismatch);
}

TEST(Weights, ParameterCountClosedForm) {
  for (const ArchConfig& arch : {ArchConfig::micro(), ArchConfig::standard()}) {
    Weights w = Weights::random(arch, 1);
    int64_t summed = 0;
    for (const auto& p : parameters(w)) summed += static_cast<int64_t>(p.values.size());
    EXPECT_EQ(summed, parameter_count(arch));
    EXPECT_EQ(w.parameter_count(), parameter_count(arch));
  }
}

TEST(Weights, ContainerRoundTripIsStrict) {
  const Weights w = Weights::random(ArchConfig::micro(), 2, {false});
  const auto bytes = w.to_container().serialize();
  const Weights back = Weights::from_container(TensorContainer::deserialize(bytes));
  EXPECT_EQ(back.to_container().serialize(), bytes);
  EXPECT_EQ(back.arch, w.arch);

  TensorContainer extra = TensorContainer::deserialize(bytes);
  extra.add(Tensor::make_f32("unexpected", {1}, {0.0f}));
  EXPECT_GRAFT_ERROR(Weights::from_container(extra), ErrorCode::WeightShapeMismatch);

  TensorContainer missing;
  const TensorContainer full = TensorContainer::deserialize(bytes);
  for (const Tensor& t : full.tensors()) {
    if (t.name != "head.scale.fc2.bias") missing.add(t);
  }
  EXPECT_GRAFT_ERROR(Weights::from_container(missing), ErrorCode::MissingTensor);
}

TEST(Weights, SeededInitIsDeterministic) {
  EXPECT_EQ(Weights::random(ArchConfig::micro(), 5).to_container().serialize(),
            Weights::random(ArchConfig::micro(), 5).to_container().serialize());
  EXPECT_NE(Weights::random(ArchConfig::micro(), 5).to_container().serialize(),
            Weights::random(ArchConfig::micro(), 6).to_container().serialize());
}

TEST(Transformer, CrossAttentionIsTokenLocal) {
  Rng rng(44);
  const Weights w = Weights::random(ArchConfig::micro(), 3, {false});
  const RowMatrix tokens = random_matrix(rng, kNumTokens, w.arch.width);
  const auto context = random_context(rng, w.arch.width);
  TransformerTrace base;
  transformer_forward(w, tokens, &context, &base);
  for (int k : {0, 7, kLeftHandToken, kFullBodyToken}) {
    auto changed = context;
    changed[k] = random_matrix(rng, context_size(k), w.arch.width);
    TransformerTrace trace;
    transformer_forward(w, tokens, &changed, &trace);
    const RowMatrix delta = (trace.after_cross[0] - base.after_cross[0]).cwiseAbs();
    for (int j = 0; j < kNumTokens; ++j) {
      if (j == k) {
        EXPECT_GT(delta.row(j).maxCoeff(), 1e-6);
      } else {
        EXPECT_LT(delta.row(j).maxCoeff(), 1e-12) << "token " << j << " saw context " << k;
      }
    }
  }
}

TEST(Transformer, GeometryOnlySkipsCrossAttention) {
  Rng rng(45);
  const Weights w = Weights::random(ArchConfig::micro(), 4);
  const RowMatrix tokens = random_matrix(rng, kNumTokens, w.arch.width);
  TransformerTrace trace;
  transformer_forward(w, tokens, nullptr, &trace);
  EXPECT_TRUE(trace.after_cross.empty());
  EXPECT_EQ(trace.after_ffn.size(), 2u);
  EXPECT_GRAFT_ERROR(transformer_forward(w, RowMatrix::Zero(23, w.arch.width), nullptr), ErrorCode::ShapeMismatch);
  auto bad = random_context(rng, w.arch.width);
  bad[3] = RowMatrix::Zero(5, w.arch.width);
  EXPECT_GRAFT_ERROR(transformer_forward(w, tokens, &bad), ErrorCode::ShapeMismatch);
}

TEST(Transformer, ZeroWeightsPassTokensThrough) {
  Rng rng(46);
  const Weights w = Weights::zeros(ArchConfig::micro());
  const RowMatrix tokens = random_matrix(rng, kNumTokens, w.arch.width);
  const auto context = random_context(rng, w.arch.width);
  EXPECT_EQ(transformer_forward(w, tokens, &context), tokens);
}

TEST(Decoder, HeadLayout) {
  Weights w = Weights::zeros(ArchConfig::micro());
  for (int i = 0; i < 6; ++i) w.body_head.fc2.bias[i] = 1 + i;
  for (int i = 0; i < 90; ++i) w.hand_head.fc2.bias[i] = 100 + i;
  for (int i = 0; i < 6; ++i) w.global_head.fc2.bias[i] = -1 - i;
  w.translation_head.fc2.bias << 0.1, 0.2, 0.3;
  for (int i = 0; i < kShapeDim; ++i) w.shape_head.fc2.bias[i] = 0.01 * i;
  w.scale_head.fc2.bias[0] = std::log(2.0);
  const InteractionGradient g = decode(w, RowMatrix::Zero(kNumTokens, w.arch.width));
  Vec6 body;
  body << 1, 2, 3, 4, 5, 6;
  for (int k = 0; k < kBodyJoints; ++k) EXPECT_EQ(g.rotations[1 + k], body);
  for (int j = 0; j < kHandJoints; ++j) {
    EXPECT_EQ(g.rotations[kLeftHandSlot + j][0], 100 + 6 * j);
    EXPECT_EQ(g.rotations[kRightHandSlot + j][5], 105 + 6 * j);
  }
  EXPECT_EQ(g.rotations[0][5], -6);
  EXPECT_EQ(g.translation, Vec3(0.1, 0.2, 0.3));
  EXPECT_EQ(g.shape[9], 0.09);
  EXPECT_NEAR(g.scale, 2.0, 1e-15);
}

TEST(Decoder, ApplyUpdateAddsAndAbsorbsScale) {
  const BodyModel m = make_toy_model();
  Rng rng(47);
  const HumanState s = test::random_state(rng);
  InteractionGradient u;
  for (auto& r : u.rotations) r = 0.01 * test::random_rot6d(rng);
  u.translation = Vec3(0.1, -0.2, 0.05);
  u.shape.setConstant(0.02);
  u.scale = 1.1;
  HumanState expected = s;
  for (int i = 0; i < kStateJoints; ++i) expected.rotations[i] += u.rotations[i];
  expected.translation += u.translation;
  expected.shape += u.shape;
  expected = absorb_scale(expected, 1.1, m);
  const HumanState got = apply_update(s, u, m);
  EXPECT_TRUE(got == expected);
}

class ProbeFixture : public ::testing::Test {
 protected:
  BodyModel model = make_toy_model();
  SpatialIndex index{make_room(true)};
  HumanState state = standing_state(model, 0.2, 3.0, 0.3);
};

TEST_F(ProbeFixture, RecordsAreNearestNeighbourGeometry) {
  const PosedMesh mesh = forward(model, state);
  const SceneQuery query(index);
  const TokenProbes probes = compute_probes(model, mesh, query);
  const Mat3 R = mesh.joint_rotations[0];
  const Vec3 root = mesh.joints.row(0).transpose();
  for (int k = 0; k < kNumTokens; ++k) {
    const size_t expected = k < kBodyJoints ? 1 : (k < kFullBodyToken ? kHandProbes : kSurfaceProbes);
    ASSERT_EQ(probes.probes[k].size(), expected);
    EXPECT_EQ(probes.visual_anchors[k].size(), k == kFullBodyToken ? size_t(kSurfaceProbes) : 1u);
    for (const ProbeRecord& r : probes.probes[k]) {
      const NearestResult nn = index.nearest(r.anchor);
      EXPECT_EQ(r.point_id, nn.point_id);
      EXPECT_EQ(r.offset, nn.point - r.anchor);
      EXPECT_EQ(r.normal, nn.normal);
      EXPECT_LT((r.body_relative - R.transpose() * (r.anchor - root)).norm(), 1e-14);
    }
  }
  for (int k = 0; k < kBodyJoints; ++k) {
    EXPECT_EQ(probes.probes[k][0].anchor, mesh.joints.row(model.state_joint_map[1 + k]).transpose());
  }
  Vec3 mean = Vec3::Zero();
  for (const ProbeRecord& r : probes.probes[kLeftHandToken]) mean += r.anchor / kHandProbes;
  EXPECT_LT((probes.visual_anchors[kLeftHandToken][0] - mean).norm(), 1e-15);
}

TEST_F(ProbeFixture, FeetProbeTheFloor) {
  const TokenProbes probes = compute_probes(model, forward(model, state), SceneQuery(index));
  // Standing on the floor: the ankle-level body tokens find floor points below.
  double lowest = INFINITY;
  for (int k = 0; k < kBodyJoints; ++k) lowest = std::min(lowest, probes.probes[k][0].offset.norm());
  EXPECT_LT(lowest, 0.15);
}

TEST(Fourier, EncodingLayout) {
  RowMatrix B(2, 3);
  B << 1, 0, 0, 0, 2, 1;
  const Vec3 p(0.3, -0.1, 0.5);
  const VecX e = fourier_encode(B, p);
  ASSERT_EQ(e.size(), 7);
  EXPECT_EQ(e[0], std::sin(0.3));
  EXPECT_EQ(e[1], std::sin(-0.2 + 0.5));
  EXPECT_EQ(e[2], std::cos(0.3));
  EXPECT_EQ(e[3], std::cos(-0.2 + 0.5));
  EXPECT_EQ(e.tail<3>(), p);
}

TEST_F(ProbeFixture, TokenizeShapesAndErrors) {
  const Weights w = Weights::random(ArchConfig::micro(), 8);
  const TokenProbes probes = compute_probes(model, forward(model, state), SceneQuery(index));
  const RowMatrix tokens = tokenize(w, state, probes);
  EXPECT_EQ(tokens.rows(), kNumTokens);
  EXPECT_EQ(tokens.cols(), w.arch.width);
  EXPECT_EQ(w.tokenizer_input(0), w.arch.probe_encoding_dim() + 6);
  EXPECT_EQ(w.tokenizer_input(kLeftHandToken), kHandProbes * w.arch.probe_dim + 6 * kHandJoints);
  EXPECT_EQ(w.tokenizer_input(kFullBodyToken), kSurfaceProbes * w.arch.probe_dim + 6 + 3 + kShapeDim);

  TokenProbes broken = probes;
  broken.probes[kLeftHandToken].pop_back();
  EXPECT_GRAFT_ERROR(tokenize(w, state, broken), ErrorCode::ShapeMismatch);
  Weights fewer = w;
  fewer.tokenizers.pop_back();
  EXPECT_GRAFT_ERROR(tokenize(fewer, state, probes), ErrorCode::WeightShapeMismatch);
}

TEST_F(ProbeFixture, ContextSamplingUsesCellFeatures) {
  Weights w = Weights::random(ArchConfig::micro(), 9, {false});
  const FeatureGrids grids = random_feature_grids(w.arch, default_intrinsics(), 14.0, 10);
  const TokenProbes probes = compute_probes(model, forward(model, state), SceneQuery(index));
  const auto context = sample_context(w, grids, probes);
  ASSERT_EQ(context.size(), size_t(kNumTokens));

  auto cell_feature = [&](int stream, int r, int c) {
    VecX fused(kFeatureLevels * w.arch.level_dim);
    for (int l = 0; l < kFeatureLevels; ++l) {
      const FeatureGrid& g = grids.levels[stream][l];
      const Eigen::Map<const VecX> x(g.cell(r, c), g.channels);
      fused.segment(l * w.arch.level_dim, w.arch.level_dim) = w.level_proj[l].weight * x + w.level_proj[l].bias;
    }
    return VecX(w.fuse.weight * fused + w.fuse.bias + w.stream_embedding.row(stream).transpose());
  };
  const int k = 3;
  const Vec3 a = probes.visual_anchors[k][0];
  const auto uv = project(grids.intrinsics, a);
  ASSERT_TRUE(uv.has_value());
  const int r0 = static_cast<int>(std::floor(uv->y() / 14.0)), c0 = static_cast<int>(std::floor(uv->x() / 14.0));
  int row = 0;
  for (int s = 0; s < kStreams; ++s) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc, ++row) {
        const VecX expected = cell_feature(s, r0 + dr, c0 + dc);
        EXPECT_LT((context[k].row(row).transpose() - expected).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }

  HumanState behind = state;
  behind.translation.z() = -5.0;
  const auto hidden = sample_context(w, grids, compute_probes(model, forward(model, behind), SceneQuery(index)));
  for (const RowMatrix& c : hidden) EXPECT_EQ(c.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FeatureGrids, ContainerRoundTripAndValidation) {
  const ArchConfig arch = ArchConfig::micro();
  const FeatureGrids g = random_feature_grids(arch, default_intrinsics(), 14.0, 3);
  const auto bytes = g.to_container().serialize();
  const FeatureGrids back = FeatureGrids::from_container(TensorContainer::deserialize(bytes));
  EXPECT_EQ(back.to_container().serialize(), bytes);
  EXPECT_NO_THROW(back.validate(&arch));
  const ArchConfig standard = ArchConfig::standard();
  EXPECT_GRAFT_ERROR(back.validate(&standard), ErrorCode::GridShapeMismatch);
  FeatureGrids uneven = back;
  uneven.levels[1][2].height -= 1;
  uneven.levels[1][2].values.resize(static_cast<size_t>(uneven.levels[1][2].height) * uneven.levels[1][2].width *
                                    uneven.levels[1][2].channels);
  EXPECT_GRAFT_ERROR(uneven.validate(), ErrorCode::GridShapeMismatch);
}

}  // namespace
}  // namespace graft
