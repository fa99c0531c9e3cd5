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

// Closed-loop inference: plan -> validated video generation -> goal tracking
// -> action sampling -> execution, with stagnation detection and two-stage
// replanning (refine the plan, regenerate the video).

#ifndef VIDPLAN_PIPELINE_PIPELINE_H_
#define VIDPLAN_PIPELINE_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vidplan/actionpolicy/policy.h"
#include "vidplan/envsim/env.h"
#include "vidplan/framematch/match.h"
#include "vidplan/spatialplan/oracle_client.h"
#include "vidplan/spatialplan/plan.h"
#include "vidplan/videodiff/video_model.h"

namespace vidplan::pipeline {

// The loop talks to the world only through this interface, so tests can
// inject adversarial dynamics.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual void Reset(const TaskSpec& task, int64_t seed) = 0;
  virtual void Step(const envsim::Action& action) = 0;
  virtual const envsim::EnvState& state() const = 0;

  Frame Render() const { return envsim::Render(state()); }
  bool Succeeded() const { return envsim::CheckSuccess(state()); }
};

class SimEnvironment : public Environment {
 public:
  void Reset(const TaskSpec& task, int64_t seed) override;
  void Step(const envsim::Action& action) override;
  const envsim::EnvState& state() const override { return state_; }

 protected:
  envsim::EnvState state_;
};

// Ignores the commanded motion during steps [start, start + length) of each
// episode: the effector stays put while the step counter advances.
class StallingEnvironment : public SimEnvironment {
 public:
  StallingEnvironment(int start, int length) : start_(start), length_(length) {}
  void Step(const envsim::Action& action) override;

 private:
  int start_;
  int length_;
};

struct Verdict {
  bool accept = false;
  double score = 0.0;  // higher is better; ranks rejected attempts
  std::string reason;
};

class VideoValidator {
 public:
  virtual ~VideoValidator() = default;
  // clip.frames[0] is the unmasked observation the clip was generated from.
  virtual Verdict Validate(const videodiff::VideoClip& clip, const PlanTable& plan) = 0;
};

// (a) every frame keeps at least half of frame 0's object-colored pixels;
// (b) the effector is visible in the first and last frames, and its closest
// approach over frames 1..7 to the plan's net displacement target (in
// pixels) beats frame 0, or lands within a pixel of it.
class RuleVideoValidator : public VideoValidator {
 public:
  Verdict Validate(const videodiff::VideoClip& clip, const PlanTable& plan) override;
};

// Sends the plan and the frames to a completion service and accepts only
// the literal reply "Accept" (surrounding whitespace ignored). Any other
// reply than Accept/Reject is retried, then counts as a rejection.
class RemoteVideoValidator : public VideoValidator {
 public:
  explicit RemoteVideoValidator(PlanOracleClient& client, int retries = kOracleRetries)
      : client_(client), retries_(retries) {}
  Verdict Validate(const videodiff::VideoClip& clip, const PlanTable& plan) override;

 private:
  PlanOracleClient& client_;
  int retries_;
};

std::string BuildValidationPrompt(const PlanTable& plan, int frames);

// Binary P6 bytes, as used for image attachments.
std::string EncodePpm(const Frame& frame);

enum class EventKind {
  kPlan,
  kGenerate,
  kValidate,
  kEncode,
  kAct,
  kGoalAdvance,
  kStuck,
  kRefine,
  kRegenerate,
  kSuccess,
};

std::string_view EventName(EventKind kind);

struct Event {
  EventKind kind = EventKind::kPlan;
  int step = 0;
  std::string detail;
};

// One JSON object per line: {"step":..,"event":"..","detail":".."}.
std::string EventLogLines(const std::vector<Event>& events);

struct PipelineConfig {
  int regen_max = 5;
  int stuck_window = 24;
  double stuck_delta = 0.01;
  videodiff::SamplerConfig video_sampler;
  policy::PolicySamplerConfig policy_sampler;
  framematch::MatchConfig match;
  double mask_ratio = 0.0;  // masks the model-facing observations when > 0
  uint64_t seed = 0;

  void Validate() const;  // ConfigError
};

struct Models {
  const videodiff::VideoModel* video = nullptr;
  const policy::PolicyModel* policy = nullptr;
};

struct GenerationResult {
  videodiff::VideoClip clip;
  int attempts = 0;
  bool validated = false;  // false: best effort after regen_max rejections
};

// Samples with seeds DeriveSeed(seed, attempt) until the validator accepts
// or regen_max attempts were made; then returns the best-scoring attempt.
// `observation` is the unmasked frame; `model_input` is what the generator
// sees (they differ when masking is on). Each attempt appends a generate and
// a validate event.
GenerationResult GenerateValidated(const videodiff::VideoModel& model, const Frame& observation,
                                   const Frame& model_input, TaskId task,
                                   const PlanTable& plan, VideoValidator& validator,
                                   const PipelineConfig& cfg, uint64_t seed,
                                   std::vector<Event>* events = nullptr, int step = 0);

// True iff not succeeded, at least `window` positions, and the largest
// pairwise distance among the last `window` positions is below `delta`.
bool IsStuck(const std::vector<Vec3>& ee_history, bool succeeded, int window, double delta);

struct EpisodeReport {
  TaskId task = TaskId::kReach;
  int64_t seed = 0;
  bool success = false;
  int steps = 0;
  int replans = 0;
  int regenerations = 0;       // clips produced after a replan
  int generation_attempts = 0;  // sampler calls overall
  int unvalidated_clips = 0;    // best-effort fallbacks
  std::vector<double> match_scores;  // composite score per executed step
  std::string final_plan;
  std::vector<Event> events;
};

// Single-line JSON summary (events excluded).
std::string ReportJson(const EpisodeReport& report);

struct EpisodeOptions {
  Environment* env = nullptr;             // default: a fresh SimEnvironment
  VideoValidator* validator = nullptr;    // default: RuleVideoValidator
  // Plan source for the first plan; refinement always uses RefinePlan.
  std::function<PlanTable(const SpatialState&, TaskId)> planner;
};

// Runs one episode of `task` until success or the task's max_steps. Throws
// ConfigError when either model is missing or the resolutions disagree.
EpisodeReport RunEpisode(const TaskSpec& task, int64_t seed, const Models& models,
                         const PipelineConfig& cfg, const EpisodeOptions& options = {});

}  // namespace vidplan::pipeline

#endif  // VIDPLAN_PIPELINE_PIPELINE_H_
