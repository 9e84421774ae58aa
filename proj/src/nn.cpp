// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/nn.hpp"

#include <cmath>

namespace graft {

RowMatrix Linear::operator()(const RowMatrix& x) const {
  if (x.cols() != weight.cols()) fail(ErrorCode::ShapeMismatch, "linear layer input width mismatch");
  RowMatrix y = x * weight.transpose();
  y.rowwise() += bias.transpose();
  return y;
}

RowMatrix LayerNorm::operator()(const RowMatrix& x) const {
  if (x.cols() != gamma.size()) fail(ErrorCode::ShapeMismatch, "layer norm width mismatch");
  RowMatrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kEps);
    y.row(r) = ((x.row(r).array() - mean) * inv * gamma.transpose().array() + beta.transpose().array()).matrix();
  }
  return y;
}

RowMatrix Mlp2::operator()(const RowMatrix& x) const { return fc2(gelu(fc1(x))); }

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

RowMatrix gelu(const RowMatrix& x) { return x.unaryExpr([](double v) { return gelu(v); }); }

RowMatrix softmax_rows(const RowMatrix& x) {
  RowMatrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

RowMatrix Attention::operator()(const RowMatrix& queries, const RowMatrix& keys_values, int heads,
                                RowMatrix* probabilities) const {
  const int dim = q.out();
  if (heads <= 0 || dim % heads != 0) fail(ErrorCode::ShapeMismatch, "width not divisible by head count");
  const int dh = dim / heads;
  const RowMatrix Q = q(queries);
  const RowMatrix K = k(keys_values);
  const RowMatrix V = v(keys_values);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  RowMatrix mixed(queries.rows(), dim);
  if (probabilities) probabilities->resize(heads * queries.rows(), keys_values.rows());
  for (int h = 0; h < heads; ++h) {
    const RowMatrix scores = Q.middleCols(h * dh, dh) * K.middleCols(h * dh, dh).transpose() * inv_sqrt;
    const RowMatrix p = softmax_rows(scores);
    if (probabilities) probabilities->middleRows(h * queries.rows(), queries.rows()) = p;
    mixed.middleCols(h * dh, dh) = p * V.middleCols(h * dh, dh);
  }
  return o(mixed);
}

}  // namespace graft
