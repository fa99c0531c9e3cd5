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

#include "vidplan/pipeline/pipeline.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "vidplan/common/error.h"

namespace vidplan::pipeline {

namespace {

// Independent seed streams under the episode master seed.
constexpr uint64_t kGenerationStream = 1;
constexpr uint64_t kActionStream = 2;
constexpr uint64_t kMaskStream = 3;

// Below this pixel distance the effector already sits on the target.
constexpr double kOnTargetPixels = 1.0;

struct Centroid {
  bool found = false;
  double row = 0.0, col = 0.0;
};

Centroid EffectorCentroid(const Frame& f) {
  Centroid c;
  int n = 0;
  for (int r = 0; r < f.height; ++r) {
    for (int col = 0; col < f.width; ++col) {
      if (envsim::IsEffectorPixel(f, r, col)) {
        c.row += r;
        c.col += col;
        ++n;
      }
    }
  }
  if (n > 0) {
    c.found = true;
    c.row /= n;
    c.col /= n;
  }
  return c;
}

int ObjectPixelCount(const Frame& f) {
  int n = 0;
  for (int r = 0; r < f.height; ++r) {
    for (int c = 0; c < f.width; ++c) n += envsim::IsObjectPixel(f, r, c);
  }
  return n;
}

std::string OneLine(std::string text) {
  while (!text.empty() && text.back() == '\n') text.pop_back();
  std::replace(text.begin(), text.end(), '\n', ';');
  return text;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void Log(std::vector<Event>* events, EventKind kind, int step, std::string detail) {
  if (events != nullptr) events->push_back({kind, step, std::move(detail)});
}

}  // namespace

void SimEnvironment::Reset(const TaskSpec& task, int64_t seed) {
  state_ = envsim::Reset(task, seed);
}

void SimEnvironment::Step(const envsim::Action& action) { state_ = envsim::Step(state_, action); }

void StallingEnvironment::Step(const envsim::Action& action) {
  const int k = state_.step_count;
  if (k >= start_ && k < start_ + length_) {
    envsim::Action frozen = action;
    frozen.delta = Vec3::Zero();
    SimEnvironment::Step(frozen);
  } else {
    SimEnvironment::Step(action);
  }
}

Verdict RuleVideoValidator::Validate(const videodiff::VideoClip& clip, const PlanTable& plan) {
  if (clip.frames.size() != static_cast<size_t>(videodiff::kClipFrames)) {
    throw ShapeError("validator expects an 8-frame clip");
  }
  const Frame& first = clip.frames.front();
  const Frame& last = clip.frames.back();
  Verdict v;

  const int base = ObjectPixelCount(first);
  double keep = 1.0;
  if (base > 0) {
    for (const Frame& f : clip.frames) {
      keep = std::min(keep, static_cast<double>(ObjectPixelCount(f)) / base);
    }
  }
  const bool persistent = keep >= 0.5;

  // Progress is the closest approach over frames 1..7: multi-phase clips
  // (grasp, then carry) legitimately leave the approach target again.
  const Centroid c0 = EffectorCentroid(first);
  bool visible = c0.found && EffectorCentroid(last).found;
  bool progress = false;
  double gain = -1.0;
  if (visible) {
    // Image rows grow with -y and columns with -x.
    const Vec3 d = PlanDisplacement(plan);
    const double tr = c0.row - d.y() * (first.height - 1);
    const double tc = c0.col - d.x() * (first.width - 1);
    const double d0 = std::hypot(c0.row - tr, c0.col - tc);
    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 1; k < clip.frames.size(); ++k) {
      const Centroid ck = EffectorCentroid(clip.frames[k]);
      if (ck.found) best = std::min(best, std::hypot(ck.row - tr, ck.col - tc));
    }
    progress = best < d0 || best <= kOnTargetPixels;
    gain = (d0 - best) / std::max(d0, 1.0);
  }
  v.accept = persistent && progress;
  v.score = std::min(keep, 1.0) + gain;
  if (!persistent) {
    v.reason = "object persistence " + std::to_string(keep);
  } else if (!visible) {
    v.reason = "effector not visible";
  } else if (!progress) {
    v.reason = "no progress toward the plan target";
  }
  return v;
}

std::string BuildValidationPrompt(const PlanTable& plan, int frames) {
  std::ostringstream os;
  os << "You are checking a generated robot video of " << frames
     << " frames (attached in order).\n"
     << "The robot should carry out this spatial plan:\n"
     << SerializePlan(plan)
     << "Check that the object never disappears and that the gripper moves as planned.\n"
     << "Respond with exactly one word: Accept or Reject.";
  return os.str();
}

std::string EncodePpm(const Frame& frame) {
  std::string out = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) +
                    "\n255\n";
  out.reserve(out.size() + frame.pixels.size());
  for (int r = 0; r < frame.height; ++r) {
    for (int c = 0; c < frame.width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::clamp(frame.at(r, c, ch), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  return out;
}

Verdict RemoteVideoValidator::Validate(const videodiff::VideoClip& clip, const PlanTable& plan) {
  std::vector<std::string> images;
  for (const Frame& f : clip.frames) images.push_back(httplib::detail::base64_encode(EncodePpm(f)));
  const std::string prompt = BuildValidationPrompt(plan, static_cast<int>(clip.frames.size()));
  std::string last;
  for (int attempt = 0; attempt <= retries_; ++attempt) {
    try {
      last = Trim(CompleteWithRetry(client_, prompt, images, retries_));
    } catch (const RemoteError& e) {
      return {false, 0.0, e.what()};
    }
    if (last == "Accept") return {true, 1.0, ""};
    if (last == "Reject") return {false, 0.0, "remote reject"};
  }
  return {false, 0.0, "unrecognized reply: " + last};
}

std::string_view EventName(EventKind kind) {
  switch (kind) {
    case EventKind::kPlan: return "plan";
    case EventKind::kGenerate: return "generate";
    case EventKind::kValidate: return "validate";
    case EventKind::kEncode: return "encode";
    case EventKind::kAct: return "act";
    case EventKind::kGoalAdvance: return "goal_advance";
    case EventKind::kStuck: return "stuck";
    case EventKind::kRefine: return "refine";
    case EventKind::kRegenerate: return "regenerate";
    case EventKind::kSuccess: return "success";
  }
  return "unknown";
}

std::string EventLogLines(const std::vector<Event>& events) {
  std::string out;
  for (const Event& e : events) {
    nlohmann::ordered_json j;
    j["step"] = e.step;
    j["event"] = std::string(EventName(e.kind));
    j["detail"] = e.detail;
    out += j.dump() + "\n";
  }
  return out;
}

void PipelineConfig::Validate() const {
  if (regen_max < 1) throw ConfigError("regen_max must be >= 1");
  if (stuck_window < 2) throw ConfigError("stuck window must be >= 2");
  if (!(stuck_delta > 0.0)) throw ConfigError("stuck displacement must be positive");
  if (video_sampler.steps < 1 || policy_sampler.steps < 1) {
    throw ConfigError("sampler steps must be >= 1");
  }
  if (!std::isfinite(video_sampler.guidance) || !std::isfinite(policy_sampler.guidance)) {
    throw ConfigError("guidance scales must be finite");
  }
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) throw ConfigError("mask ratio must lie in [0, 1)");
  match.Validate();
}

GenerationResult GenerateValidated(const videodiff::VideoModel& model, const Frame& observation,
                                   const Frame& model_input, TaskId task,
                                   const PlanTable& plan, VideoValidator& validator,
                                   const PipelineConfig& cfg, uint64_t seed,
                                   std::vector<Event>* events, int step) {
  cfg.Validate();
  RequireSameShape(observation, model_input);
  const conditioning::ConditionInput cond{task, plan};
  GenerationResult best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < cfg.regen_max; ++attempt) {
    videodiff::VideoClip clip =
        videodiff::DdimSample(model, model_input, cond, cfg.video_sampler, DeriveSeed(seed, attempt));
    clip.frames[0] = observation;
    Log(events, EventKind::kGenerate, step, "attempt " + std::to_string(attempt + 1));
    const Verdict v = validator.Validate(clip, plan);
    Log(events, EventKind::kValidate, step, v.accept ? "accept" : "reject: " + v.reason);
    if (v.accept) return {std::move(clip), attempt + 1, true};
    if (v.score > best_score) {
      best_score = v.score;
      best.clip = std::move(clip);
    }
  }
  best.attempts = cfg.regen_max;
  best.validated = false;
  std::cerr << "warning: no clip accepted after " << cfg.regen_max
            << " attempts; using the best-scoring one\n";
  return best;
}

bool IsStuck(const std::vector<Vec3>& ee_history, bool succeeded, int window, double delta) {
  if (succeeded || window < 1 || static_cast<int>(ee_history.size()) < window) return false;
  const size_t begin = ee_history.size() - window;
  double widest = 0.0;
  for (size_t i = begin; i < ee_history.size(); ++i) {
    for (size_t j = i + 1; j < ee_history.size(); ++j) {
      widest = std::max(widest, (ee_history[i] - ee_history[j]).norm());
    }
  }
  return widest < delta;
}

std::string ReportJson(const EpisodeReport& r) {
  nlohmann::ordered_json j;
  j["task"] = std::string(TaskName(r.task));
  j["seed"] = r.seed;
  j["success"] = r.success;
  j["steps"] = r.steps;
  j["replans"] = r.replans;
  j["regenerations"] = r.regenerations;
  j["generation_attempts"] = r.generation_attempts;
  j["unvalidated_clips"] = r.unvalidated_clips;
  j["match_scores"] = r.match_scores;
  j["final_plan"] = r.final_plan;
  return j.dump();
}

EpisodeReport RunEpisode(const TaskSpec& task, int64_t seed, const Models& models,
                         const PipelineConfig& cfg, const EpisodeOptions& options) {
  cfg.Validate();
  if (models.video == nullptr || models.policy == nullptr) {
    throw ConfigError("run_episode needs both a video model and a policy checkpoint");
  }
  const auto& vc = models.video->config();
  const auto& pc = models.policy->config();
  if (vc.height != task.height || vc.width != task.width || pc.height != task.height ||
      pc.width != task.width) {
    throw ConfigError("model resolution does not match the task resolution");
  }

  SimEnvironment default_env;
  Environment& env = options.env != nullptr ? *options.env : default_env;
  RuleVideoValidator default_validator;
  VideoValidator& validator = options.validator != nullptr ? *options.validator : default_validator;
  const auto planner = options.planner ? options.planner
                                       : [](const SpatialState& s, TaskId id) {
                                           return GeneratePlan(s.delta_p, id);
                                         };

  EpisodeReport report;
  report.task = task.task_id;
  report.seed = seed;
  const uint64_t master = DeriveSeed(cfg.seed, static_cast<uint64_t>(seed));
  const uint64_t gen_root = DeriveSeed(master, kGenerationStream);
  const uint64_t act_root = DeriveSeed(master, kActionStream);
  const uint64_t mask_root = DeriveSeed(master, kMaskStream);
  uint64_t gen_round = 0, act_round = 0, mask_round = 0;
  const auto model_view = [&](const Frame& f) {
    return cfg.mask_ratio > 0.0 ? videodiff::MaskInput(f, cfg.mask_ratio,
                                                       DeriveSeed(mask_root, mask_round++))
                                : f;
  };
  auto& events = report.events;

  env.Reset(task, seed);
  const int max_steps = env.state().task.max_steps;
  Frame obs = env.Render();
  PlanTable plan = planner(envsim::GetSpatialState(env.state()), task.task_id);
  Log(&events, EventKind::kPlan, 0, OneLine(SerializePlan(plan)));

  const auto generate = [&](int step) {
    GenerationResult g = GenerateValidated(*models.video, obs, model_view(obs), task.task_id, plan,
                                           validator, cfg, DeriveSeed(gen_root, gen_round++),
                                           &events, step);
    report.generation_attempts += g.attempts;
    if (!g.validated) ++report.unvalidated_clips;
    return std::move(g.clip);
  };
  videodiff::VideoClip clip = generate(0);

  framematch::GoalTracker tracker;
  std::deque<policy::ActionRow> queue;
  std::vector<Vec3> history = {env.state().ee_pos};
  int steps = 0;
  if (env.Succeeded()) Log(&events, EventKind::kSuccess, 0, "");

  while (!env.Succeeded() && steps < max_steps) {
    if (queue.empty()) {
      policy::PolicyInput in;
      in.current = model_view(obs);
      in.goal = clip.frames[tracker.goal_index];
      in.p_ee = env.state().ee_pos;
      in.p_obj = env.state().obj_pos;
      Log(&events, EventKind::kEncode, steps, "goal " + std::to_string(tracker.goal_index));
      const policy::ActionSequence seq = policy::SampleActions(
          *models.policy, in, cfg.policy_sampler, DeriveSeed(act_root, act_round++));
      queue.assign(seq.begin(), seq.end());
      Log(&events, EventKind::kAct, steps, std::to_string(seq.size()) + " actions");
    }
    const envsim::Action a = envsim::ClipAction(policy::DenormalizeAction(queue.front()));
    queue.pop_front();
    env.Step(a);
    ++steps;
    obs = env.Render();
    history.push_back(env.state().ee_pos);

    if (env.Succeeded()) {
      Log(&events, EventKind::kSuccess, steps, "");
      break;
    }

    const framematch::TrackerStep ts = framematch::TrackerUpdate(tracker, obs, clip.frames, cfg.match);
    report.match_scores.push_back(ts.score.total);
    if (ts.advanced) {
      Log(&events, EventKind::kGoalAdvance, steps,
          "goal " + std::to_string(ts.tracker.goal_index) + (ts.forced ? " forced" : ""));
      queue.clear();
    }
    tracker = ts.tracker;

    if (IsStuck(history, false, cfg.stuck_window, cfg.stuck_delta)) {
      Log(&events, EventKind::kStuck, steps, "");
      plan = RefinePlan(plan, envsim::GetSpatialState(env.state()), task.task_id);
      Log(&events, EventKind::kRefine, steps, OneLine(SerializePlan(plan)));
      Log(&events, EventKind::kRegenerate, steps, "");
      clip = generate(steps);
      ++report.replans;
      ++report.regenerations;
      tracker = {};
      queue.clear();
      history = {env.state().ee_pos};
    }
  }

  report.success = env.Succeeded();
  report.steps = steps;
  report.final_plan = SerializePlan(plan);
  return report;
}

}  // namespace vidplan::pipeline
