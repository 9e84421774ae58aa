// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/tensor_container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace graft {
namespace {

constexpr char kMagic[4] = {'G', 'R', 'F', 'T'};

template <typename T>
void put_le(std::vector<uint8_t>& out, T value) {
  uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::string get_string(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void need(uint64_t n) const {
    if (n > bytes_.size() - pos_) fail(ErrorCode::FormatError, "tensor container truncated");
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

template <typename T>
std::vector<T> read_payload(Reader& reader, uint64_t count) {
  reader.need(count * sizeof(T));
  std::vector<T> values(count);
  for (auto& v : values) v = reader.get<T>();
  return values;
}

}  // namespace

uint64_t Tensor::element_count() const {
  uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<double> Tensor::to_f64() const {
  if (auto* f = std::get_if<std::vector<float>>(&data)) return {f->begin(), f->end()};
  if (auto* d = std::get_if<std::vector<double>>(&data)) return *d;
  fail(ErrorCode::FormatError, "tensor '" + name + "' is not floating point");
}

const std::vector<int64_t>& Tensor::i64() const {
  if (auto* v = std::get_if<std::vector<int64_t>>(&data)) return *v;
  fail(ErrorCode::FormatError, "tensor '" + name + "' is not i64");
}

Tensor Tensor::make_f32(std::string name, std::vector<uint64_t> dims, std::vector<float> values) {
  return Tensor{std::move(name), std::move(dims), std::move(values)};
}

Tensor Tensor::make_f64(std::string name, std::vector<uint64_t> dims, std::vector<double> values) {
  return Tensor{std::move(name), std::move(dims), std::move(values)};
}

Tensor Tensor::make_i64(std::string name, std::vector<uint64_t> dims, std::vector<int64_t> values) {
  return Tensor{std::move(name), std::move(dims), std::move(values)};
}

void TensorContainer::add(Tensor tensor) {
  if (contains(tensor.name)) fail(ErrorCode::FormatError, "duplicate tensor name '" + tensor.name + "'");
  if (tensor.name.size() > 0xFFFF) fail(ErrorCode::FormatError, "tensor name too long");
  if (tensor.dims.size() > 0xFF) fail(ErrorCode::FormatError, "tensor rank too large");
  const uint64_t declared = tensor.element_count();
  const uint64_t actual = std::visit([](const auto& v) { return static_cast<uint64_t>(v.size()); }, tensor.data);
  if (declared != actual) {
    fail(ErrorCode::FormatError, "tensor '" + tensor.name + "' payload does not match its dims");
  }
  tensors_.push_back(std::move(tensor));
}

const Tensor* TensorContainer::find(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const Tensor& TensorContainer::get(const std::string& name) const {
  const Tensor* t = find(name);
  if (t == nullptr) fail(ErrorCode::MissingTensor, name);
  return *t;
}

std::vector<uint8_t> TensorContainer::serialize() const {
  std::vector<uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<uint32_t>(out, version);
  put_le<uint32_t>(out, static_cast<uint32_t>(tensors_.size()));
  for (const auto& t : tensors_) {
    put_le<uint16_t>(out, static_cast<uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_le<uint8_t>(out, static_cast<uint8_t>(t.dtype()));
    put_le<uint8_t>(out, static_cast<uint8_t>(t.dims.size()));
    for (auto d : t.dims) put_le<uint64_t>(out, d);
    std::visit([&](const auto& values) {
      for (auto v : values) put_le(out, v);
    }, t.data);
  }
  return out;
}

TensorContainer TensorContainer::deserialize(std::span<const uint8_t> bytes) {
  Reader reader(bytes);
  if (reader.get_string(4) != std::string(kMagic, 4)) fail(ErrorCode::FormatError, "bad container magic");
  TensorContainer container;
  container.version = reader.get<uint32_t>();
  if (container.version != kContainerVersion) {
    fail(ErrorCode::FormatError, "unsupported container version " + std::to_string(container.version));
  }
  const uint32_t count = reader.get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = reader.get_string(reader.get<uint16_t>());
    const uint8_t dtype = reader.get<uint8_t>();
    const uint8_t rank = reader.get<uint8_t>();
    for (uint8_t r = 0; r < rank; ++r) t.dims.push_back(reader.get<uint64_t>());
    uint64_t n = 1;
    for (auto d : t.dims) {
      if (d != 0 && n > UINT64_MAX / d) fail(ErrorCode::FormatError, "tensor dims overflow");
      n *= d;
    }
    switch (dtype) {
      case 0: t.data = read_payload<float>(reader, n); break;
      case 1: t.data = read_payload<double>(reader, n); break;
      case 2: t.data = read_payload<int64_t>(reader, n); break;
      default:
        fail(ErrorCode::FormatError, "tensor '" + t.name + "' has unknown dtype " + std::to_string(dtype));
    }
    container.add(std::move(t));
  }
  if (!reader.done()) fail(ErrorCode::FormatError, "trailing bytes after last tensor");
  return container;
}

void TensorContainer::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  write_file_bytes(path, bytes);
}

TensorContainer TensorContainer::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return deserialize(bytes);
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

}  // namespace graft
