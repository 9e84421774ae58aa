// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/body_model.hpp"
#include "graft/weights.hpp"

#include <array>
#include <vector>

namespace graft {

/// Token states after every sublayer of every layer.
struct TransformerTrace {
  std::vector<RowMatrix> after_self;
  std::vector<RowMatrix> after_cross;  // empty when context is absent
  std::vector<RowMatrix> after_ffn;
};

/// Pre-norm layers of self-attention over all tokens, cross-attention of
/// token k over context[k] only, and a GELU feed-forward block. A null
/// `context` skips every cross-attention sublayer.
RowMatrix transformer_forward(const Weights& weights, const RowMatrix& tokens, const std::vector<RowMatrix>* context,
                              TransformerTrace* trace = nullptr);

/// Decoded corrective update. `rotations` follows the HumanState slot layout.
struct InteractionGradient {
  std::array<Vec6, kStateJoints> rotations;
  Vec3 translation = Vec3::Zero();
  ShapeVec shape = ShapeVec::Zero();
  double scale = 1.0;
};

InteractionGradient decode(const Weights& weights, const RowMatrix& refined_tokens);

/// theta + delta in raw 6D coordinates, followed by absorb_scale.
HumanState apply_update(const HumanState& state, const InteractionGradient& update, const BodyModel& model);

}  // namespace graft
