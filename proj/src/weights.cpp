// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/weights.hpp"

#include <cmath>

namespace graft {

ArchConfig ArchConfig::micro() {
  ArchConfig a;
  a.width = 32;
  a.layers = 2;
  a.heads = 4;
  a.ffn = 128;
  a.fourier_features = 8;
  a.probe_dim = 8;
  a.head_hidden = 16;
  a.level_dim = 8;
  a.level_channels = {16, 16, 16, 16};
  return a;
}

int Weights::tokenizer_input(int token) const {
  if (token < kBodyJoints) return arch.probe_encoding_dim() + 6;
  if (token < kFullBodyToken) return kHandProbes * arch.probe_dim + 6 * kHandJoints;
  return kSurfaceProbes * arch.probe_dim + 6 + 3 + kShapeDim;
}

Weights Weights::zeros(const ArchConfig& a) {
  if (a.width <= 0 || a.layers < 0 || a.heads <= 0 || a.width % a.heads != 0 || a.ffn <= 0 ||
      a.fourier_features <= 0 || a.probe_dim <= 0 || a.head_hidden <= 0 || a.level_dim <= 0) {
    fail(ErrorCode::WeightShapeMismatch, "invalid architecture constants");
  }
  for (int c : a.level_channels) {
    if (c <= 0) fail(ErrorCode::WeightShapeMismatch, "invalid feature level width");
  }
  Weights w;
  w.arch = a;
  w.fourier_offset = RowMatrix::Zero(a.fourier_features, 3);
  w.fourier_normal = RowMatrix::Zero(a.fourier_features, 3);
  w.fourier_position = RowMatrix::Zero(a.fourier_features, 3);
  w.probe_mlp = Mlp2(a.probe_encoding_dim(), a.probe_dim, a.probe_dim);
  for (int k = 0; k < kNumTokens; ++k) w.tokenizers.emplace_back(w.tokenizer_input(k), a.width, a.width);
  for (int l = 0; l < kFeatureLevels; ++l) w.level_proj[l] = Linear(a.level_channels[l], a.level_dim);
  w.fuse = Linear(kFeatureLevels * a.level_dim, a.width);
  w.stream_embedding = RowMatrix::Zero(kStreams, a.width);
  for (int i = 0; i < a.layers; ++i) {
    TransformerLayer layer;
    layer.norm_self = layer.norm_cross = layer.norm_ffn = LayerNorm(a.width);
    layer.self_attn = layer.cross_attn = Attention(a.width);
    layer.ffn = Mlp2(a.width, a.ffn, a.width);
    w.layers.push_back(std::move(layer));
  }
  w.body_head = Mlp2(a.width, a.head_hidden, 6);
  w.hand_head = Mlp2(a.width, a.head_hidden, 6 * kHandJoints);
  w.global_head = Mlp2(a.width, a.head_hidden, 6);
  w.translation_head = Mlp2(a.width, a.head_hidden, 3);
  w.shape_head = Mlp2(a.width, a.head_hidden, kShapeDim);
  w.scale_head = Mlp2(a.width, a.head_hidden, 1);
  for (auto& p : parameters(w)) std::fill(p.values.begin(), p.values.end(), 0.0);
  return w;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

Weights Weights::random(const ArchConfig& arch, uint64_t seed, InitOptions options) {
  Weights w = zeros(arch);
  Rng rng(seed);
  for (auto& p : parameters(w)) {
    const bool decoder_output = starts_with(p.name, "head.") && p.name.find(".fc2.") != std::string::npos;
    if (decoder_output && options.zero_decoder_outputs) continue;
    if (ends_with(p.name, ".gamma")) {
      std::fill(p.values.begin(), p.values.end(), 1.0);
    } else if (starts_with(p.name, "fourier.")) {
      for (double& v : p.values) v = rng.normal();
    } else if (p.name == "visual.stream_embedding") {
      for (double& v : p.values) v = 0.02 * rng.normal();
    } else if (ends_with(p.name, ".weight")) {
      const double sd = 1.0 / std::sqrt(static_cast<double>(p.dims[1]));
      for (double& v : p.values) v = sd * rng.normal();
    }
  }
  return w;
}

std::vector<ParamView> parameters(Weights& w) {
  std::vector<ParamView> out;
  auto matrix = [&](const std::string& name, RowMatrix& m) {
    out.push_back({name, {static_cast<uint64_t>(m.rows()), static_cast<uint64_t>(m.cols())},
                   std::span<double>(m.data(), static_cast<size_t>(m.size()))});
  };
  auto vector = [&](const std::string& name, VecX& v) {
    out.push_back({name, {static_cast<uint64_t>(v.size())}, std::span<double>(v.data(), static_cast<size_t>(v.size()))});
  };
  auto linear = [&](const std::string& name, Linear& l) {
    matrix(name + ".weight", l.weight);
    vector(name + ".bias", l.bias);
  };
  auto mlp = [&](const std::string& name, Mlp2& m) {
    linear(name + ".fc1", m.fc1);
    linear(name + ".fc2", m.fc2);
  };
  auto norm = [&](const std::string& name, LayerNorm& n) {
    vector(name + ".gamma", n.gamma);
    vector(name + ".beta", n.beta);
  };
  auto attention = [&](const std::string& name, Attention& a) {
    linear(name + ".q", a.q);
    linear(name + ".k", a.k);
    linear(name + ".v", a.v);
    linear(name + ".o", a.o);
  };

  matrix("fourier.offset", w.fourier_offset);
  matrix("fourier.normal", w.fourier_normal);
  matrix("fourier.position", w.fourier_position);
  mlp("probe_mlp", w.probe_mlp);
  for (size_t k = 0; k < w.tokenizers.size(); ++k) mlp("tokenizer." + std::to_string(k), w.tokenizers[k]);
  for (int l = 0; l < kFeatureLevels; ++l) linear("visual.level" + std::to_string(l), w.level_proj[l]);
  linear("visual.fuse", w.fuse);
  matrix("visual.stream_embedding", w.stream_embedding);
  for (size_t i = 0; i < w.layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i);
    auto& layer = w.layers[i];
    norm(p + ".norm_self", layer.norm_self);
    attention(p + ".self_attn", layer.self_attn);
    norm(p + ".norm_cross", layer.norm_cross);
    attention(p + ".cross_attn", layer.cross_attn);
    norm(p + ".norm_ffn", layer.norm_ffn);
    mlp(p + ".ffn", layer.ffn);
  }
  mlp("head.body", w.body_head);
  mlp("head.hand", w.hand_head);
  mlp("head.global", w.global_head);
  mlp("head.translation", w.translation_head);
  mlp("head.shape", w.shape_head);
  mlp("head.scale", w.scale_head);
  return out;
}

int64_t Weights::parameter_count() const {
  int64_t n = 0;
  for (const auto& p : parameters(const_cast<Weights&>(*this))) n += static_cast<int64_t>(p.values.size());
  return n;
}

int64_t parameter_count(const ArchConfig& a) {
  auto linear = [](int64_t in, int64_t out) { return in * out + out; };
  auto mlp = [&](int64_t in, int64_t hidden, int64_t out) { return linear(in, hidden) + linear(hidden, out); };
  const int64_t w = a.width;
  int64_t n = 3 * 3 * static_cast<int64_t>(a.fourier_features);
  n += mlp(a.probe_encoding_dim(), a.probe_dim, a.probe_dim);
  n += kBodyJoints * mlp(a.probe_encoding_dim() + 6, w, w);
  n += 2 * mlp(kHandProbes * a.probe_dim + 6 * kHandJoints, w, w);
  n += mlp(kSurfaceProbes * a.probe_dim + 6 + 3 + kShapeDim, w, w);
  for (int c : a.level_channels) n += linear(c, a.level_dim);
  n += linear(kFeatureLevels * a.level_dim, w) + kStreams * w;
  n += a.layers * (3 * 2 * w + 2 * 4 * linear(w, w) + mlp(w, a.ffn, w));
  n += mlp(w, a.head_hidden, 6) + mlp(w, a.head_hidden, 6 * kHandJoints) + mlp(w, a.head_hidden, 6) +
       mlp(w, a.head_hidden, 3) + mlp(w, a.head_hidden, kShapeDim) + mlp(w, a.head_hidden, 1);
  return n;
}

namespace {

std::vector<int64_t> arch_values(const ArchConfig& a) {
  std::vector<int64_t> v{a.width, a.layers, a.heads, a.ffn, a.fourier_features, a.probe_dim, a.head_hidden, a.level_dim};
  for (int c : a.level_channels) v.push_back(c);
  return v;
}

constexpr const char* kArchTensor = "config.arch";

}  // namespace

TensorContainer Weights::to_container() const {
  TensorContainer c;
  const auto arch_v = arch_values(arch);
  c.add(Tensor::make_i64(kArchTensor, {arch_v.size()}, arch_v));
  for (const auto& p : parameters(const_cast<Weights&>(*this))) {
    std::vector<float> values(p.values.begin(), p.values.end());
    c.add(Tensor::make_f32(p.name, p.dims, std::move(values)));
  }
  return c;
}

Weights Weights::from_container(const TensorContainer& c) {
  const auto& arch_t = c.get(kArchTensor).i64();
  if (arch_t.size() != 8 + kFeatureLevels) fail(ErrorCode::WeightShapeMismatch, "config.arch has wrong length");
  ArchConfig a;
  a.width = static_cast<int>(arch_t[0]);
  a.layers = static_cast<int>(arch_t[1]);
  a.heads = static_cast<int>(arch_t[2]);
  a.ffn = static_cast<int>(arch_t[3]);
  a.fourier_features = static_cast<int>(arch_t[4]);
  a.probe_dim = static_cast<int>(arch_t[5]);
  a.head_hidden = static_cast<int>(arch_t[6]);
  a.level_dim = static_cast<int>(arch_t[7]);
  for (int l = 0; l < kFeatureLevels; ++l) a.level_channels[l] = static_cast<int>(arch_t[8 + l]);

  Weights w = zeros(a);
  auto params = parameters(w);
  if (c.tensors().size() != params.size() + 1) {
    for (const auto& t : c.tensors()) {
      bool known = t.name == kArchTensor;
      for (const auto& p : params) known = known || p.name == t.name;
      if (!known) fail(ErrorCode::WeightShapeMismatch, "unexpected tensor '" + t.name + "'");
    }
  }
  for (auto& p : params) {
    const Tensor& t = c.get(p.name);
    if (t.dims != p.dims) fail(ErrorCode::WeightShapeMismatch, "tensor '" + p.name + "' has the wrong shape");
    const auto values = t.to_f64();
    std::copy(values.begin(), values.end(), p.values.begin());
  }
  return w;
}

void Weights::save(const std::filesystem::path& path) const { to_container().save(path); }

Weights Weights::load(const std::filesystem::path& path) { return from_container(TensorContainer::load(path)); }

}  // namespace graft
