// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/scene.hpp"

#include <filesystem>
#include <iosfwd>

namespace graft {

/// Entry point of the `graft` tool. Returns 0 on success, 2 on usage errors
/// and 1 on runtime errors; errors are reported on `err` as a JSON object
/// {"error": <code>, "message": <text>}.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Reads a PLY scene; normals are estimated with `normals_k` neighbours when
/// the file has none.
ScenePointCloud load_scene(const std::filesystem::path& path, int normals_k);

}  // namespace graft
