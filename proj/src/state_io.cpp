// Copyright (C) 2026 The graft Authors
// SPDX-License-Identifier: Apache-2.0

#include "graft/state_io.hpp"

#include "graft/tensor_container.hpp"

#include <json.hpp>

#include <cmath>

namespace graft {
namespace {

using nlohmann::json;

json vec_json(const Eigen::Ref<const VecX>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json rotation_block(const HumanState& s, int first, int count) {
  json a = json::array();
  for (int i = 0; i < count; ++i) a.push_back(vec_json(s.rotations[first + i]));
  return a;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(ErrorCode::FormatError, where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(ErrorCode::FormatError, where + ": non-finite value");
  return v;
}

const json& field(const json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) fail(ErrorCode::FormatError, "missing field '" + key + "'");
  return obj.at(key);
}

VecX read_vector(const json& j, int n, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    fail(ErrorCode::FormatError, where + ": expected " + std::to_string(n) + " numbers");
  }
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = number(j[i], where);
  return v;
}

void read_rotation_block(const json& j, HumanState& s, int first, int count, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != count) {
    fail(ErrorCode::FormatError, where + ": expected " + std::to_string(count) + " rotations");
  }
  for (int i = 0; i < count; ++i) s.rotations[first + i] = read_vector(j[i], 6, where);
}

}  // namespace

std::string serialize_state_document(const StateDocument& doc) {
  json root;
  root["schema_version"] = kStateSchemaVersion;
  json humans = json::array();
  for (const HumanState& s : doc.humans) {
    json h;
    h["global_orient6d"] = vec_json(s.global_orient());
    h["body_pose6d"] = rotation_block(s, 1, kBodyJoints);
    h["left_hand6d"] = rotation_block(s, kLeftHandSlot, kHandJoints);
    h["right_hand6d"] = rotation_block(s, kRightHandSlot, kHandJoints);
    h["translation_m"] = vec_json(s.translation);
    h["shape"] = vec_json(s.shape);
    humans.push_back(std::move(h));
  }
  root["humans"] = std::move(humans);
  if (doc.intrinsics) {
    const CameraIntrinsics& k = *doc.intrinsics;
    root["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  }
  return root.dump(2) + "\n";
}

StateDocument parse_state_document(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::FormatError, std::string("invalid JSON: ") + e.what());
  }
  const json& version = field(root, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kStateSchemaVersion) {
    fail(ErrorCode::FormatError, "unsupported schema_version");
  }
  const json& humans = field(root, "humans");
  if (!humans.is_array()) fail(ErrorCode::FormatError, "'humans' must be an array");
  StateDocument doc;
  for (size_t i = 0; i < humans.size(); ++i) {
    const json& h = humans[i];
    const std::string where = "humans[" + std::to_string(i) + "]";
    HumanState s;
    read_rotation_block(json::array({field(h, "global_orient6d")}), s, 0, 1, where + ".global_orient6d");
    read_rotation_block(field(h, "body_pose6d"), s, 1, kBodyJoints, where + ".body_pose6d");
    read_rotation_block(field(h, "left_hand6d"), s, kLeftHandSlot, kHandJoints, where + ".left_hand6d");
    read_rotation_block(field(h, "right_hand6d"), s, kRightHandSlot, kHandJoints, where + ".right_hand6d");
    s.translation = read_vector(field(h, "translation_m"), 3, where + ".translation_m");
    s.shape = read_vector(field(h, "shape"), kShapeDim, where + ".shape");
    doc.humans.push_back(s);
  }
  if (root.contains("intrinsics")) {
    const json& k = root["intrinsics"];
    CameraIntrinsics c;
    c.fx = number(field(k, "fx"), "intrinsics.fx");
    c.fy = number(field(k, "fy"), "intrinsics.fy");
    c.cx = number(field(k, "cx"), "intrinsics.cx");
    c.cy = number(field(k, "cy"), "intrinsics.cy");
    c.width = static_cast<int>(number(field(k, "width"), "intrinsics.width"));
    c.height = static_cast<int>(number(field(k, "height"), "intrinsics.height"));
    c.validate();
    doc.intrinsics = c;
  }
  return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

StateDocument load_state_document(const std::filesystem::path& path) {
  return parse_state_document(read_text_file(path));
}

void save_state_document(const std::filesystem::path& path, const StateDocument& doc) {
  write_text_file(path, serialize_state_document(doc));
}

}  // namespace graft
