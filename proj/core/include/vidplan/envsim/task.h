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

#ifndef VIDPLAN_ENVSIM_TASK_H_
#define VIDPLAN_ENVSIM_TASK_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "vidplan/common/frame.h"

namespace vidplan {

enum class TaskId { kReach = 0, kPush = 1, kPickPlace = 2 };

inline constexpr int kNumTasks = 3;
inline constexpr std::array<TaskId, kNumTasks> kAllTasks = {
    TaskId::kReach, TaskId::kPush, TaskId::kPickPlace};

// "reach", "push", "pick_place". ParseTaskId throws ConfigError otherwise.
std::string_view TaskName(TaskId id);
TaskId ParseTaskId(std::string_view name);

struct TaskSpec {
  TaskId task_id = TaskId::kReach;
  Vec3 object_start = Vec3::Zero();
  Vec3 goal_center = Vec3::Zero();
  double goal_radius = 0.05;
  int max_steps = 100;
  Vec3 ee_start = Vec3::Zero();
  int height = 32;
  int width = 32;
};

// Built-in layout for each task at the given resolution.
TaskSpec DefaultTaskSpec(TaskId id, int height = 32, int width = 32);

// Throws ConfigError when positions leave [0,1]^3, radius <= 0, etc.
void ValidateTaskSpec(const TaskSpec& spec);

// Reads {"resolution": [h, w], "tasks": [{"task_id": ..., "object_start":
// [x,y,z], "goal_region": {"center": [x,y,z], "radius": r}, "max_steps": n,
// "ee_start": [x,y,z]}]}. Fields other than task_id default to the built-in
// layout for that task.
std::vector<TaskSpec> ParseTaskSpecs(const std::string& json_text);
std::vector<TaskSpec> LoadTaskSpecs(const std::string& path);

}  // namespace vidplan

#endif  // VIDPLAN_ENVSIM_TASK_H_
