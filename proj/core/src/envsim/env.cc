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

#include "vidplan/envsim/env.h"

#include <algorithm>
#include <cmath>

#include "vidplan/common/error.h"
#include "vidplan/common/rng.h"

namespace vidplan::envsim {

namespace {

constexpr double kBackground = 0.12;
constexpr double kExpertGain = 0.5;
constexpr double kPushStandoff = 0.03;
constexpr double kPushContactBand = 0.015;

// Palette. Marker colors are multiplied by the z brightness.
constexpr double kGoalColor[3] = {0.15, 0.30, 0.90};
constexpr double kObjectColor[3] = {0.15, 1.00, 0.15};
constexpr double kEffectorColor[3] = {1.00, 0.25, 0.25};

Vec3 ClipToWorkspace(const Vec3& p) { return p.cwiseMax(0.0).cwiseMin(1.0); }

Vec3 ClipDelta(const Vec3& d) { return d.cwiseMax(-kMaxDelta).cwiseMin(kMaxDelta); }

double Quantize(double v) {
  return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

double ZBrightness(double z) { return 0.35 + 0.65 * std::clamp(z, 0.0, 1.0); }

void Paint(Frame& f, int row, int col, const double (&color)[3], double gain) {
  if (row < 0 || row >= f.height || col < 0 || col >= f.width) return;
  for (int c = 0; c < 3; ++c) f.at(row, col, c) = Quantize(color[c] * gain);
}

int MarkerHalfSize(int width) {
  return std::max(1, static_cast<int>(std::lround(width / 16.0)));
}

}  // namespace

std::pair<double, double> ProjectToPixel(const Vec3& p, int height, int width) {
  return {(1.0 - p.y()) * (height - 1), (1.0 - p.x()) * (width - 1)};
}

EnvState Reset(const TaskSpec& task, int64_t seed) {
  ValidateTaskSpec(task);
  Rng rng(DeriveSeed(static_cast<uint64_t>(seed),
                     static_cast<uint64_t>(task.task_id)));
  // uniform point in a ball of radius kStartJitter
  Vec3 dir(rng.Normal(), rng.Normal(), rng.Normal());
  if (dir.norm() < 1e-12) dir = Vec3::UnitX();
  const double r = kStartJitter * std::cbrt(rng.Uniform());
  EnvState s;
  s.task = task;
  s.rng_seed = seed;
  s.ee_pos = task.ee_start;
  s.obj_pos = ClipToWorkspace(task.object_start + r * dir.normalized());
  if (task.task_id == TaskId::kReach) s.task.goal_center = s.obj_pos;
  return s;
}

Action ClipAction(const Action& action) {
  return Action{ClipDelta(action.delta), std::clamp(action.gripper, -1.0, 1.0)};
}

EnvState Step(const EnvState& state, const Action& action) {
  if (state.step_count >= state.task.max_steps) {
    throw EpisodeExhaustedError("step after max_steps (" +
                                std::to_string(state.task.max_steps) + ")");
  }
  if (!action.delta.allFinite() || !std::isfinite(action.gripper)) {
    throw ValidationError("non-finite action");
  }
  const Action a = ClipAction(action);
  EnvState next = state;
  const bool closed = a.gripper >= 0.0;
  if (!closed) next.attached = false;

  const Vec3 before = state.ee_pos;
  next.ee_pos = ClipToWorkspace(state.ee_pos + a.delta);
  const Vec3 moved = next.ee_pos - before;

  if (next.attached) {
    next.obj_pos = ClipToWorkspace(state.obj_pos + moved);
  } else {
    const double dist = (next.obj_pos - next.ee_pos).norm();
    if (closed && dist <= kGraspRadius) {
      next.attached = true;
    } else if (state.task.task_id == TaskId::kPush && dist < kContactRadius) {
      next.obj_pos = ClipToWorkspace(state.obj_pos + moved);
    }
  }
  next.gripper_closed = closed;
  ++next.step_count;
  return next;
}

Frame Render(const EnvState& state) {
  const int h = state.task.height, w = state.task.width;
  Frame f(h, w, Quantize(kBackground));
  const int half = MarkerHalfSize(w);

  // goal ring
  const auto [gr, gc] = ProjectToPixel(state.task.goal_center, h, w);
  const double ring = std::max(half + 1.5, state.task.goal_radius * (w - 1));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double d = std::hypot(r - gr, c - gc);
      if (std::abs(d - ring) <= 0.6) Paint(f, r, c, kGoalColor, 1.0);
    }
  }

  // object: filled square
  const auto [orow, ocol] = ProjectToPixel(state.obj_pos, h, w);
  const int oc_r = static_cast<int>(std::lround(orow));
  const int oc_c = static_cast<int>(std::lround(ocol));
  const double ob = ZBrightness(state.obj_pos.z());
  for (int r = oc_r - half; r <= oc_r + half; ++r) {
    for (int c = oc_c - half; c <= oc_c + half; ++c) {
      Paint(f, r, c, kObjectColor, ob);
    }
  }

  // end effector: cross, drawn last
  const auto [erow, ecol] = ProjectToPixel(state.ee_pos, h, w);
  const int ec_r = static_cast<int>(std::lround(erow));
  const int ec_c = static_cast<int>(std::lround(ecol));
  const double eb = ZBrightness(state.ee_pos.z());
  for (int k = -half; k <= half; ++k) {
    Paint(f, ec_r + k, ec_c, kEffectorColor, eb);
    Paint(f, ec_r, ec_c + k, kEffectorColor, eb);
  }
  return f;
}

SpatialState GetSpatialState(const EnvState& state) {
  return MakeSpatialState(state.ee_pos, state.obj_pos);
}

bool CheckSuccess(const EnvState& state) {
  const TaskSpec& t = state.task;
  switch (t.task_id) {
    case TaskId::kReach:
      return (state.ee_pos - t.goal_center).norm() <= t.goal_radius;
    case TaskId::kPush:
      return (state.obj_pos - t.goal_center).norm() <= t.goal_radius;
    case TaskId::kPickPlace:
      return !state.attached &&
             (state.obj_pos - t.goal_center).norm() <= t.goal_radius;
  }
  return false;
}

Action ExpertAction(const EnvState& state) {
  const TaskSpec& t = state.task;
  Action a;
  a.gripper = -1.0;
  switch (t.task_id) {
    case TaskId::kReach:
      a.delta = ClipDelta(kExpertGain * (t.goal_center - state.ee_pos));
      break;
    case TaskId::kPush: {
      const Vec3 to_goal = t.goal_center - state.obj_pos;
      const Vec3 dir = to_goal.norm() > 1e-9 ? to_goal.normalized() : Vec3::Zero();
      const Vec3 to_obj = state.obj_pos - state.ee_pos;
      // Approach moves that graze the contact radius already shove the
      // object, so the EE settles just outside it; treat that band, from
      // behind the object, as contact.
      const bool behind = to_obj.dot(dir) > 0.8 * to_obj.norm();
      const bool in_contact =
          behind && to_obj.norm() < kContactRadius + kPushContactBand;
      if (in_contact) {
        a.delta = ClipDelta(kExpertGain * to_goal);
      } else {
        const Vec3 standoff = state.obj_pos - kPushStandoff * dir;
        a.delta = ClipDelta(kExpertGain * (standoff - state.ee_pos));
      }
      break;
    }
    case TaskId::kPickPlace: {
      const double obj_to_goal = (state.obj_pos - t.goal_center).norm();
      if (state.attached) {
        if (obj_to_goal <= 0.5 * t.goal_radius) {
          a.gripper = -1.0;  // release in place
        } else {
          a.delta = ClipDelta(kExpertGain * (t.goal_center - state.obj_pos));
          a.gripper = 1.0;
        }
      } else if (obj_to_goal <= t.goal_radius) {
        a.gripper = -1.0;
      } else {
        const Vec3 to_obj = state.obj_pos - state.ee_pos;
        a.delta = ClipDelta(kExpertGain * to_obj);
        a.gripper = (to_obj - a.delta).norm() <= kGraspRadius ? 1.0 : -1.0;
      }
      break;
    }
  }
  return a;
}

bool IsObjectPixel(const Frame& f, int row, int col) {
  const double r = f.at(row, col, 0), g = f.at(row, col, 1),
               b = f.at(row, col, 2);
  return g > 0.2 && g > 1.8 * r && g > 1.8 * b;
}

bool IsEffectorPixel(const Frame& f, int row, int col) {
  const double r = f.at(row, col, 0), g = f.at(row, col, 1),
               b = f.at(row, col, 2);
  return r > 0.2 && r > 1.8 * g && r > 1.8 * b;
}

std::vector<EnvState> RolloutExpert(const TaskSpec& task, int64_t seed) {
  std::vector<EnvState> states{Reset(task, seed)};
  while (!CheckSuccess(states.back()) &&
         states.back().step_count < task.max_steps) {
    states.push_back(Step(states.back(), ExpertAction(states.back())));
  }
  return states;
}

}  // namespace vidplan::envsim
