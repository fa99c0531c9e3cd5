// Copyright 2026 The vidplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vidplan/envsim/task.h"

#include <cmath>
#include <set>

#include "json.hpp"
#include "vidplan/common/binary_io.h"
#include "vidplan/common/error.h"

namespace vidplan {

using nlohmann::json;

std::string_view TaskName(TaskId id) {
  switch (id) {
    case TaskId::kReach:
      return "reach";
    case TaskId::kPush:
      return "push";
    case TaskId::kPickPlace:
      return "pick_place";
  }
  return "unknown";
}

TaskId ParseTaskId(std::string_view name) {
  for (TaskId id : kAllTasks) {
    if (TaskName(id) == name) return id;
  }
  throw ConfigError("unknown task_id '" + std::string(name) + "'");
}

TaskSpec DefaultTaskSpec(TaskId id, int height, int width) {
  TaskSpec spec;
  spec.task_id = id;
  spec.height = height;
  spec.width = width;
  spec.goal_radius = 0.05;
  switch (id) {
    case TaskId::kReach:
      spec.object_start = Vec3(0.30, 0.70, 0.40);
      spec.goal_center = spec.object_start;
      spec.ee_start = Vec3(0.65, 0.35, 0.60);
      spec.max_steps = 80;
      break;
    case TaskId::kPush:
      spec.object_start = Vec3(0.45, 0.50, 0.30);
      spec.goal_center = Vec3(0.75, 0.50, 0.30);
      spec.ee_start = Vec3(0.15, 0.50, 0.30);
      spec.max_steps = 120;
      break;
    case TaskId::kPickPlace:
      spec.object_start = Vec3(0.35, 0.35, 0.15);
      spec.goal_center = Vec3(0.65, 0.65, 0.45);
      spec.ee_start = Vec3(0.30, 0.30, 0.50);
      spec.max_steps = 150;
      break;
  }
  return spec;
}

namespace {

bool InUnitCube(const Vec3& p) {
  return p.allFinite() && (p.array() >= 0.0).all() && (p.array() <= 1.0).all();
}

Vec3 ReadVec3(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(std::string(field) + " must be a 3-element array");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) {
      throw ConfigError(std::string(field) + " must hold numbers");
    }
    v[i] = j[i].get<double>();
  }
  return v;
}

void RejectUnknownKeys(const json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

void ValidateTaskSpec(const TaskSpec& spec) {
  const std::string name(TaskName(spec.task_id));
  if (!InUnitCube(spec.object_start)) {
    throw ConfigError(name + ": object_start outside the unit workspace");
  }
  if (!InUnitCube(spec.goal_center)) {
    throw ConfigError(name + ": goal_region outside the unit workspace");
  }
  if (!InUnitCube(spec.ee_start)) {
    throw ConfigError(name + ": ee_start outside the unit workspace");
  }
  if (!(spec.goal_radius > 0.0) || !std::isfinite(spec.goal_radius)) {
    throw ConfigError(name + ": goal radius must be positive");
  }
  if (spec.max_steps <= 0) throw ConfigError(name + ": max_steps must be > 0");
  if (spec.height < 4 || spec.width < 4) {
    throw ConfigError(name + ": resolution must be at least 4x4");
  }
}

std::vector<TaskSpec> ParseTaskSpecs(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("task config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("task config must be an object");
  RejectUnknownKeys(root, {"resolution", "tasks"}, "task config");
  int height = 32, width = 32;
  if (root.contains("resolution")) {
    const auto& r = root["resolution"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() ||
        !r[1].is_number_integer()) {
      throw ConfigError("resolution must be [height, width]");
    }
    height = r[0].get<int>();
    width = r[1].get<int>();
  }
  if (!root.contains("tasks") || !root["tasks"].is_array() ||
      root["tasks"].empty()) {
    throw ConfigError("task config needs a nonempty 'tasks' array");
  }
  std::vector<TaskSpec> specs;
  for (const auto& t : root["tasks"]) {
    if (!t.is_object() || !t.contains("task_id") || !t["task_id"].is_string()) {
      throw ConfigError("each task needs a string task_id");
    }
    RejectUnknownKeys(
        t, {"task_id", "object_start", "goal_region", "max_steps", "ee_start"},
        "task entry");
    TaskSpec spec =
        DefaultTaskSpec(ParseTaskId(t["task_id"].get<std::string>()), height,
                        width);
    if (t.contains("object_start")) {
      spec.object_start = ReadVec3(t["object_start"], "object_start");
      if (spec.task_id == TaskId::kReach) spec.goal_center = spec.object_start;
    }
    if (t.contains("goal_region")) {
      const auto& g = t["goal_region"];
      if (!g.is_object()) throw ConfigError("goal_region must be an object");
      RejectUnknownKeys(g, {"center", "radius"}, "goal_region");
      if (g.contains("center")) spec.goal_center = ReadVec3(g["center"], "center");
      if (g.contains("radius")) {
        if (!g["radius"].is_number()) throw ConfigError("radius must be a number");
        spec.goal_radius = g["radius"].get<double>();
      }
    }
    if (t.contains("max_steps")) {
      if (!t["max_steps"].is_number_integer()) {
        throw ConfigError("max_steps must be an integer");
      }
      spec.max_steps = t["max_steps"].get<int>();
    }
    if (t.contains("ee_start")) spec.ee_start = ReadVec3(t["ee_start"], "ee_start");
    ValidateTaskSpec(spec);
    specs.push_back(spec);
  }
  return specs;
}

std::vector<TaskSpec> LoadTaskSpecs(const std::string& path) {
  return ParseTaskSpecs(ReadFileBytes(path));
}

}  // namespace vidplan
