// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/ply.hpp"

#include "graft/tensor_container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

namespace graft {
namespace {

struct Property {
  std::string name;
  int size = 0;
  bool is_double = false;
  bool is_float = false;
};

int type_size(const std::string& type, bool& is_float, bool& is_double) {
  is_float = type == "float" || type == "float32";
  is_double = type == "double" || type == "float64";
  if (is_float) return 4;
  if (is_double) return 8;
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32") return 4;
  fail(ErrorCode::FormatError, "unsupported PLY property type '" + type + "'");
}

template <typename T>
T load_le(const uint8_t* p) {
  uint8_t raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
  T v;
  std::memcpy(&v, raw, sizeof(T));
  return v;
}

}  // namespace

PlyCloud read_ply(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const std::string end_marker = "end_header\n";
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const size_t header_end = text.find(end_marker);
  if (text.substr(0, 4) != "ply\n" || header_end == std::string_view::npos) {
    fail(ErrorCode::FormatError, "'" + path.string() + "' is not a PLY file");
  }

  std::istringstream header(std::string(text.substr(0, header_end)));
  std::string line;
  bool binary_le = false;
  bool in_vertex = false;
  bool vertex_seen = false;
  size_t vertex_count = 0;
  std::vector<Property> props;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      size_t count = 0;
      ls >> name >> count;
      if (vertex_seen && name != "vertex") break;  // later elements are not read
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_seen = true;
        vertex_count = count;
      } else {
        fail(ErrorCode::FormatError, "PLY elements before 'vertex' are not supported");
      }
    } else if (word == "property" && in_vertex) {
      std::string type;
      ls >> type;
      if (type == "list") fail(ErrorCode::FormatError, "list properties on vertices are not supported");
      Property p;
      ls >> p.name;
      p.size = type_size(type, p.is_float, p.is_double);
      props.push_back(p);
    }
  }
  if (!binary_le) fail(ErrorCode::FormatError, "only binary_little_endian PLY is supported");
  if (!vertex_seen) fail(ErrorCode::FormatError, "PLY has no vertex element");

  auto find = [&](const std::string& name) {
    int offset = 0;
    for (const auto& p : props) {
      if (p.name == name) {
        if (!p.is_float && !p.is_double) fail(ErrorCode::FormatError, "PLY property '" + name + "' must be float");
        return std::pair<int, bool>(offset, p.is_double);
      }
      offset += p.size;
    }
    return std::pair<int, bool>(-1, false);
  };
  int stride = 0;
  for (const auto& p : props) stride += p.size;
  const std::pair<int, bool> xyz[3] = {find("x"), find("y"), find("z")};
  const std::pair<int, bool> nrm[3] = {find("nx"), find("ny"), find("nz")};
  for (const auto& c : xyz) {
    if (c.first < 0) fail(ErrorCode::FormatError, "PLY vertices need x, y and z");
  }
  const int normal_props = (nrm[0].first >= 0) + (nrm[1].first >= 0) + (nrm[2].first >= 0);
  if (normal_props != 0 && normal_props != 3) fail(ErrorCode::FormatError, "PLY normals need nx, ny and nz");

  const size_t data_begin = header_end + end_marker.size();
  if (vertex_count > (bytes.size() - data_begin) / std::max(stride, 1)) {
    fail(ErrorCode::FormatError, "PLY vertex data truncated");
  }
  auto read = [&](size_t row, const std::pair<int, bool>& prop) {
    const uint8_t* p = bytes.data() + data_begin + row * stride + prop.first;
    return prop.second ? load_le<double>(p) : static_cast<double>(load_le<float>(p));
  };

  PlyCloud cloud;
  const auto n = static_cast<Eigen::Index>(vertex_count);
  cloud.points.resize(n, 3);
  if (normal_props == 3) cloud.normals = Points3(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      cloud.points(i, c) = read(i, xyz[c]);
      if (cloud.normals) (*cloud.normals)(i, c) = read(i, nrm[c]);
    }
  }
  return cloud;
}

void write_ply(const std::filesystem::path& path, const Points3& points, const Points3* normals) {
  if (normals && normals->rows() != points.rows()) {
    fail(ErrorCode::DimensionMismatch, "one normal per point is required");
  }
  std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(points.rows()) +
                       "\nproperty float x\nproperty float y\nproperty float z\n";
  if (normals) header += "property float nx\nproperty float ny\nproperty float nz\n";
  header += "end_header\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  auto put = [&](double value) {
    const auto f = static_cast<float>(value);
    uint8_t raw[4];
    std::memcpy(raw, &f, 4);
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
    out.insert(out.end(), std::begin(raw), std::end(raw));
  };
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int c = 0; c < 3; ++c) put(points(i, c));
    if (normals) {
      for (int c = 0; c < 3; ++c) put((*normals)(i, c));
    }
  }
  write_file_bytes(path, out);
}

}  // namespace graft
