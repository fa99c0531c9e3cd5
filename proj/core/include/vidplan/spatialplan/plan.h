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

// Spatial plan tables: ordered atomic subgoals and their canonical text form
//
//   Plan:
//   1. move [-1, 0, 0] [0.19]
//   2. move [0, 0, -1] [0.21]
//   3. push [0, 0, 0] [0.00]

#ifndef VIDPLAN_SPATIALPLAN_PLAN_H_
#define VIDPLAN_SPATIALPLAN_PLAN_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "vidplan/envsim/task.h"
#include "vidplan/spatialplan/spatial_state.h"

namespace vidplan {

enum class ActionType {
  kMove = 0,
  kPush = 1,
  kGrasp = 2,
  kRelease = 3,
  kPress = 4,
  kTurn = 5,
  kPlace = 6,
};

inline constexpr int kNumActionTypes = 7;
inline constexpr int kMaxSubgoals = 8;
// Axes with |offset| at or below this produce no move subgoal.
inline constexpr double kAxisEpsilon = 0.005;

std::string_view ActionName(ActionType type);
// Throws VocabularyError for symbols outside the 7-word vocabulary.
ActionType ParseActionType(std::string_view name);
bool IsTerminal(ActionType type);

using Direction = std::array<int, 3>;

struct Subgoal {
  ActionType action = ActionType::kMove;
  Direction direction = {0, 0, 0};
  double distance = 0.0;

  friend bool operator==(const Subgoal&, const Subgoal&) = default;
};

struct PlanTable {
  std::vector<Subgoal> subgoals;

  friend bool operator==(const PlanTable&, const PlanTable&) = default;
};

// Throws RangeError / ValidationError when a plan breaks the table
// invariants (size 1..8, at most one terminal subgoal and only in last
// position, terminal subgoals with zero direction and distance, move with a
// nonzero direction, components in {-1,0,1}, distance >= 0).
void ValidatePlan(const PlanTable& plan);

// p_obj - p_ee. Throws ValidationError on non-finite input.
Vec3 ComputeOffset(const Vec3& p_ee, const Vec3& p_obj);

// Rule-based planner: one move per axis (x, then y, then z) whose offset
// exceeds kAxisEpsilon, distances rounded to centimetres, then the task's
// terminal subgoal.
PlanTable GeneratePlan(const Vec3& delta_p, TaskId task);
PlanTable GeneratePlan(const Vec3& delta_p, std::string_view task_name);

// Regenerates from the current geometry; the stale plan is ignored.
PlanTable RefinePlan(const PlanTable& old_plan, const SpatialState& current,
                     TaskId task);

std::string SerializePlan(const PlanTable& plan);

// Throws ParseError (with line number) for malformed lines, RangeError for
// out-of-range components or negative distances.
PlanTable ParsePlan(std::string_view text);

// Net displacement of the move subgoals, sum of direction * distance.
Vec3 PlanDisplacement(const PlanTable& plan);

}  // namespace vidplan

#endif  // VIDPLAN_SPATIALPLAN_PLAN_H_
