// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace graft {

// Named-tensor archive. Layout (all integers little-endian):
//   "GRFT" | version u32 | count u32 |
//   per tensor: name_len u16 | name utf-8 | dtype u8 | rank u8 | dims u64[rank] | payload
enum class DType : uint8_t { F32 = 0, F64 = 1, I64 = 2 };

inline constexpr uint32_t kContainerVersion = 1;

struct Tensor {
  using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<int64_t>>;

  std::string name;
  std::vector<uint64_t> dims;
  Storage data;

  DType dtype() const { return static_cast<DType>(data.index()); }
  uint64_t element_count() const;

  /// Floating payload widened to double; rejects integer tensors.
  std::vector<double> to_f64() const;
  /// Integer payload; rejects floating tensors.
  const std::vector<int64_t>& i64() const;

  static Tensor make_f32(std::string name, std::vector<uint64_t> dims, std::vector<float> values);
  static Tensor make_f64(std::string name, std::vector<uint64_t> dims, std::vector<double> values);
  static Tensor make_i64(std::string name, std::vector<uint64_t> dims, std::vector<int64_t> values);
};

class TensorContainer {
 public:
  void add(Tensor tensor);
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  const Tensor* find(const std::string& name) const;
  /// Throws MissingTensor naming the tensor.
  const Tensor& get(const std::string& name) const;
  const std::vector<Tensor>& tensors() const { return tensors_; }

  uint32_t version = kContainerVersion;

  std::vector<uint8_t> serialize() const;
  static TensorContainer deserialize(std::span<const uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static TensorContainer load(const std::filesystem::path& path);

 private:
  std::vector<Tensor> tensors_;
};

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);

}  // namespace graft
