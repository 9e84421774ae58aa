// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/common.hpp"

namespace graft {

// Small dense building blocks. Activations are row-major matrices with one
// token per row.

struct Linear {
  RowMatrix weight;  // out x in
  VecX bias;         // out

  Linear() = default;
  Linear(int in, int out) : weight(RowMatrix::Zero(out, in)), bias(VecX::Zero(out)) {}

  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }
  RowMatrix operator()(const RowMatrix& x) const;
};

struct LayerNorm {
  VecX gamma;
  VecX beta;

  LayerNorm() = default;
  explicit LayerNorm(int dim) : gamma(VecX::Ones(dim)), beta(VecX::Zero(dim)) {}

  RowMatrix operator()(const RowMatrix& x) const;

  static constexpr double kEps = 1e-5;
};

/// Two linear layers with a GELU in between.
struct Mlp2 {
  Linear fc1;
  Linear fc2;

  Mlp2() = default;
  Mlp2(int in, int hidden, int out) : fc1(in, hidden), fc2(hidden, out) {}

  RowMatrix operator()(const RowMatrix& x) const;
};

struct Attention {
  Linear q, k, v, o;

  Attention() = default;
  explicit Attention(int dim) : q(dim, dim), k(dim, dim), v(dim, dim), o(dim, dim) {}

  /// Multi-head scaled dot-product attention of `queries` over `keys_values`.
  /// When `probabilities` is given it receives the softmax rows of every head
  /// stacked vertically (heads * Nq x Nk).
  RowMatrix operator()(const RowMatrix& queries, const RowMatrix& keys_values, int heads,
                       RowMatrix* probabilities = nullptr) const;
};

/// Exact (erf-based) GELU.
double gelu(double x);
RowMatrix gelu(const RowMatrix& x);

/// Row-wise numerically stable softmax.
RowMatrix softmax_rows(const RowMatrix& x);

}  // namespace graft
