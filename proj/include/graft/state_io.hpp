// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "graft/body_model.hpp"
#include "graft/scene.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace graft {

inline constexpr int kStateSchemaVersion = 1;

/// JSON document of human states:
///   {"schema_version": 1,
///    "humans": [{"global_orient6d": [6], "body_pose6d": [21][6],
///                "left_hand6d": [15][6], "right_hand6d": [15][6],
///                "translation_m": [3], "shape": [10]}],
///    "intrinsics": {"fx", "fy", "cx", "cy", "width", "height"}}   (optional)
struct StateDocument {
  std::vector<HumanState> humans;
  std::optional<CameraIntrinsics> intrinsics;
};

/// Doubles are written in shortest round-trip form.
std::string serialize_state_document(const StateDocument& doc);
/// Throws FormatError on malformed documents.
StateDocument parse_state_document(const std::string& text);

StateDocument load_state_document(const std::filesystem::path& path);
void save_state_document(const std::filesystem::path& path, const StateDocument& doc);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace graft
