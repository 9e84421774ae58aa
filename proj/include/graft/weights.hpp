// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/body_model.hpp"
#include "graft/nn.hpp"
#include "graft/tensor_container.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace graft {

inline constexpr int kNumTokens = kBodyJoints + 2 + 1;
inline constexpr int kFullBodyToken = kNumTokens - 1;
inline constexpr int kLeftHandToken = kBodyJoints;
inline constexpr int kRightHandToken = kBodyJoints + 1;
inline constexpr int kHandProbes = 5;
inline constexpr int kFeatureLevels = 4;
inline constexpr int kStreams = 2;

struct ArchConfig {
  int width = 512;
  int layers = 5;
  int heads = 8;
  int ffn = 2048;
  int fourier_features = 32;  // rows of each frequency matrix
  int probe_dim = 64;         // output of the shared probe MLP
  int head_hidden = 256;
  int level_dim = 128;
  std::array<int, kFeatureLevels> level_channels{1024, 1024, 1024, 1024};

  static ArchConfig standard() { return {}; }
  /// Small configuration used by the finite-difference training harness.
  static ArchConfig micro();

  int fourier_dim() const { return 2 * fourier_features + 3; }
  int probe_encoding_dim() const { return 3 * fourier_dim(); }
  bool operator==(const ArchConfig&) const = default;
};

struct TransformerLayer {
  LayerNorm norm_self, norm_cross, norm_ffn;
  Attention self_attn, cross_attn;
  Mlp2 ffn;
};

/// Every learnable tensor of the refinement network.
struct Weights {
  ArchConfig arch;

  RowMatrix fourier_offset;    // F x 3
  RowMatrix fourier_normal;    // F x 3
  RowMatrix fourier_position;  // F x 3
  Mlp2 probe_mlp;              // shared by hand and full-body probes
  std::vector<Mlp2> tokenizers;  // one per token

  std::array<Linear, kFeatureLevels> level_proj;
  Linear fuse;
  RowMatrix stream_embedding;  // 2 x width

  std::vector<TransformerLayer> layers;

  Mlp2 body_head, hand_head, global_head, translation_head, shape_head, scale_head;

  /// Correctly shaped, all parameters zero (including norm gains).
  static Weights zeros(const ArchConfig& arch);

  struct InitOptions {
    // Zero the last layer of every decoder head so that a fresh network
    // predicts the no-op update.
    bool zero_decoder_outputs = true;
  };
  static Weights random(const ArchConfig& arch, uint64_t seed, InitOptions options);
  static Weights random(const ArchConfig& arch, uint64_t seed) { return random(arch, seed, InitOptions{}); }

  /// Tokenizer input width of token k.
  int tokenizer_input(int token) const;

  int64_t parameter_count() const;

  TensorContainer to_container() const;
  /// Validates every tensor against the stored architecture; throws
  /// WeightShapeMismatch / MissingTensor.
  static Weights from_container(const TensorContainer& container);
  void save(const std::filesystem::path& path) const;
  static Weights load(const std::filesystem::path& path);
};

/// One learnable tensor, flattened row-major.
struct ParamView {
  std::string name;
  std::vector<uint64_t> dims;
  std::span<double> values;
};

/// All parameters in a fixed order.
std::vector<ParamView> parameters(Weights& weights);

/// Closed-form parameter count for an architecture.
int64_t parameter_count(const ArchConfig& arch);

}  // namespace graft
