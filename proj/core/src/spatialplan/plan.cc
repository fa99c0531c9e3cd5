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

#include "vidplan/spatialplan/plan.h"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "vidplan/common/error.h"

namespace vidplan {

namespace {

constexpr std::array<std::string_view, kNumActionTypes> kActionNames = {
    "move", "push", "grasp", "release", "press", "turn", "place"};

ActionType TerminalFor(TaskId task) {
  switch (task) {
    case TaskId::kReach:
      return ActionType::kPress;
    case TaskId::kPush:
      return ActionType::kPush;
    case TaskId::kPickPlace:
      return ActionType::kGrasp;
  }
  return ActionType::kPress;
}

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

std::string_view ActionName(ActionType type) {
  return kActionNames[static_cast<int>(type)];
}

ActionType ParseActionType(std::string_view name) {
  for (int i = 0; i < kNumActionTypes; ++i) {
    if (kActionNames[i] == name) return static_cast<ActionType>(i);
  }
  throw VocabularyError("unknown action type '" + std::string(name) + "'");
}

bool IsTerminal(ActionType type) {
  return type != ActionType::kMove && type != ActionType::kTurn;
}

void ValidatePlan(const PlanTable& plan) {
  const auto& goals = plan.subgoals;
  if (goals.empty()) throw ValidationError("plan is empty");
  if (goals.size() > static_cast<size_t>(kMaxSubgoals)) {
    throw ValidationError("plan exceeds " + std::to_string(kMaxSubgoals) +
                          " subgoals");
  }
  for (size_t i = 0; i < goals.size(); ++i) {
    const Subgoal& g = goals[i];
    for (int c : g.direction) {
      if (c < -1 || c > 1) throw RangeError("direction component outside {-1,0,1}");
    }
    if (!(g.distance >= 0.0) || !std::isfinite(g.distance)) {
      throw RangeError("subgoal distance must be finite and non-negative");
    }
    const bool zero_dir = g.direction == Direction{0, 0, 0};
    if (IsTerminal(g.action)) {
      if (i + 1 != goals.size()) {
        throw ValidationError("terminal subgoal '" +
                              std::string(ActionName(g.action)) +
                              "' must be last");
      }
      if (!zero_dir || g.distance != 0.0) {
        throw RangeError("terminal subgoals carry zero direction and distance");
      }
    } else if (g.action == ActionType::kMove && zero_dir) {
      throw RangeError("move requires a nonzero direction");
    }
  }
}

Vec3 ComputeOffset(const Vec3& p_ee, const Vec3& p_obj) {
  if (!p_ee.allFinite() || !p_obj.allFinite()) {
    throw ValidationError("non-finite position");
  }
  return p_obj - p_ee;
}

PlanTable GeneratePlan(const Vec3& delta_p, TaskId task) {
  if (!delta_p.allFinite()) throw ValidationError("non-finite offset");
  PlanTable plan;
  for (int axis = 0; axis < 3; ++axis) {
    const double d = delta_p[axis];
    if (std::abs(d) <= kAxisEpsilon) continue;
    Subgoal g;
    g.action = ActionType::kMove;
    g.direction[axis] = d > 0 ? 1 : -1;
    g.distance = std::round(std::abs(d) * 100.0) / 100.0;
    plan.subgoals.push_back(g);
  }
  plan.subgoals.push_back(Subgoal{TerminalFor(task), {0, 0, 0}, 0.0});
  return plan;
}

PlanTable GeneratePlan(const Vec3& delta_p, std::string_view task_name) {
  return GeneratePlan(delta_p, ParseTaskId(task_name));
}

PlanTable RefinePlan(const PlanTable& /*old_plan*/, const SpatialState& current,
                     TaskId task) {
  return GeneratePlan(current.delta_p, task);
}

std::string SerializePlan(const PlanTable& plan) {
  std::string out = "Plan:";
  char buf[96];
  for (size_t i = 0; i < plan.subgoals.size(); ++i) {
    const Subgoal& g = plan.subgoals[i];
    std::snprintf(buf, sizeof(buf), "\n%zu. %s [%d, %d, %d] [%.2f]", i + 1,
                  std::string(ActionName(g.action)).c_str(), g.direction[0],
                  g.direction[1], g.direction[2], g.distance + 0.0);
    out += buf;
  }
  return out;
}

PlanTable ParsePlan(std::string_view text) {
  static const std::regex kLine(
      R"(^(\d+)\s*\.\s*([A-Za-z_]+)\s*\[\s*([+-]?\d+)\s*,\s*([+-]?\d+)\s*,\s*([+-]?\d+)\s*\]\s*\[\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*\]$)");
  if (Trim(text).empty()) throw ParseError(1, "empty plan text");

  PlanTable plan;
  std::istringstream stream{std::string(text)};
  std::string raw;
  int line_no = 0;
  bool seen_header = false;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::string line = Trim(raw);
    if (line.empty()) continue;
    if (line == "Plan:") {
      if (seen_header || !plan.subgoals.empty()) {
        throw ParseError(line_no, "unexpected 'Plan:' header");
      }
      seen_header = true;
      continue;
    }
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) {
      throw ParseError(line_no, "expected '<n>. <action> [dx, dy, dz] [dist]'");
    }
    const long index = std::stol(m[1].str());
    if (index != static_cast<long>(plan.subgoals.size()) + 1) {
      throw ParseError(line_no, "subgoal index " + m[1].str() +
                                    " is not consecutive");
    }
    Subgoal g;
    try {
      g.action = ParseActionType(m[2].str());
    } catch (const VocabularyError& e) {
      throw ParseError(line_no, e.what());
    }
    for (int c = 0; c < 3; ++c) {
      const long v = std::stol(m[3 + c].str());
      if (v < -1 || v > 1) {
        throw RangeError("line " + std::to_string(line_no) +
                         ": direction component " + m[3 + c].str() +
                         " outside {-1, 0, 1}");
      }
      g.direction[c] = static_cast<int>(v);
    }
    g.distance = std::stod(m[6].str());
    if (g.distance < 0.0) {
      throw RangeError("line " + std::to_string(line_no) +
                       ": negative distance");
    }
    g.distance += 0.0;  // normalizes -0.0
    plan.subgoals.push_back(g);
    if (plan.subgoals.size() > static_cast<size_t>(kMaxSubgoals)) {
      throw ParseError(line_no, "more than " + std::to_string(kMaxSubgoals) +
                                    " subgoals");
    }
  }
  if (plan.subgoals.empty()) throw ParseError(line_no, "plan has no subgoals");
  ValidatePlan(plan);
  return plan;
}

Vec3 PlanDisplacement(const PlanTable& plan) {
  Vec3 d = Vec3::Zero();
  for (const Subgoal& g : plan.subgoals) {
    if (g.action != ActionType::kMove) continue;
    for (int c = 0; c < 3; ++c) d[c] += g.direction[c] * g.distance;
  }
  return d;
}

}  // namespace vidplan
