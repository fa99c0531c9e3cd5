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

// Point-mass manipulation environment over the unit cube.
//
// World axes map onto the raster as: +x toward the left edge, +y toward the
// top edge, z as marker brightness (brighter is larger z). This follows the
// plan-text direction semantics "x: right-/left+, y: up+/down-".

#ifndef VIDPLAN_ENVSIM_ENV_H_
#define VIDPLAN_ENVSIM_ENV_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vidplan/common/frame.h"
#include "vidplan/envsim/task.h"
#include "vidplan/spatialplan/spatial_state.h"

namespace vidplan::envsim {

inline constexpr double kMaxDelta = 0.05;
inline constexpr double kGraspRadius = 0.03;
inline constexpr double kContactRadius = 0.04;
inline constexpr double kStartJitter = 0.05;

struct Action {
  Vec3 delta = Vec3::Zero();
  double gripper = -1.0;  // >= 0 closes
};

struct EnvState {
  Vec3 ee_pos = Vec3::Zero();
  Vec3 obj_pos = Vec3::Zero();
  bool gripper_closed = false;
  bool attached = false;
  int step_count = 0;
  // Per-episode copy of the task. For reach the goal center is re-anchored
  // on the jittered object, since the object is the reach target.
  TaskSpec task;
  int64_t rng_seed = 0;
};

// Throws ConfigError for invalid task specs.
EnvState Reset(const TaskSpec& task, int64_t seed);

// Throws EpisodeExhaustedError once step_count reached max_steps and
// ValidationError for non-finite actions.
EnvState Step(const EnvState& state, const Action& action);

Frame Render(const EnvState& state);

SpatialState GetSpatialState(const EnvState& state);

bool CheckSuccess(const EnvState& state);

// Scripted proportional controller used to generate demonstrations.
Action ExpertAction(const EnvState& state);

// Clamps delta to +-kMaxDelta and gripper to [-1, 1].
Action ClipAction(const Action& action);

// Pixel classification used by the renderer's palette; also used to read
// markers back out of generated frames.
bool IsObjectPixel(const Frame& frame, int row, int col);
bool IsEffectorPixel(const Frame& frame, int row, int col);

// Continuous (row, col) raster position of world (x, y).
std::pair<double, double> ProjectToPixel(const Vec3& p, int height, int width);

// Runs the expert from Reset(task, seed) until success or max_steps.
// Returns the visited states (including the initial one).
std::vector<EnvState> RolloutExpert(const TaskSpec& task, int64_t seed);

}  // namespace vidplan::envsim

#endif  // VIDPLAN_ENVSIM_ENV_H_
