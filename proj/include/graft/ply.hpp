// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/common.hpp"

#include <filesystem>
#include <optional>

namespace graft {

struct PlyCloud {
  Points3 points;
  std::optional<Points3> normals;
};

/// Reads the vertex element of a binary little-endian PLY file. Properties
/// x,y,z are required, nx,ny,nz optional; float and double are accepted and
/// unknown vertex properties are skipped.
PlyCloud read_ply(const std::filesystem::path& path);

/// Writes x,y,z (and nx,ny,nz when given) as float32.
void write_ply(const std::filesystem::path& path, const Points3& points, const Points3* normals = nullptr);

}  // namespace graft
