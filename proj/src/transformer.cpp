// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/transformer.hpp"

#include "graft/probes.hpp"

#include <cmath>

namespace graft {

RowMatrix transformer_forward(const Weights& w, const RowMatrix& tokens, const std::vector<RowMatrix>* context,
                              TransformerTrace* trace) {
  if (tokens.rows() != kNumTokens || tokens.cols() != w.arch.width) {
    fail(ErrorCode::ShapeMismatch, "transformer expects 24 tokens of the model width");
  }
  if (context) {
    if (context->size() != kNumTokens) fail(ErrorCode::ShapeMismatch, "context must hold one block per token");
    for (int k = 0; k < kNumTokens; ++k) {
      const RowMatrix& c = (*context)[k];
      if (c.rows() != context_size(k) || c.cols() != w.arch.width) {
        fail(ErrorCode::ShapeMismatch, "context block " + std::to_string(k) + " has the wrong shape");
      }
    }
  }

  RowMatrix x = tokens;
  for (const TransformerLayer& layer : w.layers) {
    const RowMatrix h = layer.norm_self(x);
    x += layer.self_attn(h, h, w.arch.heads);
    if (trace) trace->after_self.push_back(x);

    if (context) {
      const RowMatrix q = layer.norm_cross(x);
      RowMatrix update(kNumTokens, w.arch.width);
      for (int k = 0; k < kNumTokens; ++k) {
        update.row(k) = layer.cross_attn(q.row(k), (*context)[k], w.arch.heads);
      }
      x += update;
      if (trace) trace->after_cross.push_back(x);
    }

    x += layer.ffn(layer.norm_ffn(x));
    if (trace) trace->after_ffn.push_back(x);
  }
  return x;
}

InteractionGradient decode(const Weights& w, const RowMatrix& z) {
  if (z.rows() != kNumTokens || z.cols() != w.arch.width) {
    fail(ErrorCode::ShapeMismatch, "decoder expects 24 tokens of the model width");
  }
  InteractionGradient g;
  const RowMatrix body = w.body_head(z.topRows(kBodyJoints));
  for (int k = 0; k < kBodyJoints; ++k) g.rotations[1 + k] = body.row(k).transpose();
  const RowMatrix hands = w.hand_head(z.middleRows(kLeftHandToken, 2));
  for (int j = 0; j < kHandJoints; ++j) {
    g.rotations[kLeftHandSlot + j] = hands.block<1, 6>(0, 6 * j).transpose();
    g.rotations[kRightHandSlot + j] = hands.block<1, 6>(1, 6 * j).transpose();
  }
  const RowMatrix full = z.row(kFullBodyToken);
  g.rotations[0] = w.global_head(full).transpose();
  g.translation = w.translation_head(full).transpose();
  g.shape = w.shape_head(full).transpose();
  g.scale = std::exp(w.scale_head(full)(0, 0));
  return g;
}

namespace {

// Exact zeros are skipped so that a no-op update keeps the sign of -0.0
// entries and the state stays bit-identical.
template <typename Derived, typename Other>
void add_nonzero(Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<Other>& d) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (d[i] != 0.0) x[i] += d[i];
  }
}

}  // namespace

HumanState apply_update(const HumanState& state, const InteractionGradient& u, const BodyModel& model) {
  HumanState next = state;
  for (int i = 0; i < kStateJoints; ++i) add_nonzero(next.rotations[i], u.rotations[i]);
  add_nonzero(next.translation, u.translation);
  add_nonzero(next.shape, u.shape);
  return absorb_scale(next, u.scale, model);
}

}  // namespace graft
