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

#include <gtest/gtest.h>

#include "vidplan/common/error.h"
#include "vidplan/datasetkit/dataset.h"
#include "vidplan/pipeline/pipeline.h"

namespace vidplan::pipeline {
namespace {

constexpr int kRes = 8;

videodiff::VideoModelConfig TinyVideo() {
  videodiff::VideoModelConfig c;
  c.height = kRes;
  c.width = kRes;
  c.condition = {4, 8};
  c.channels = {4};
  c.emb_dim = 8;
  c.groups = 2;
  c.diffusion_steps = 20;
  return c;
}

policy::PolicyConfig TinyPolicy() {
  policy::PolicyConfig c;
  c.height = kRes;
  c.width = kRes;
  c.obs_channels = {4, 4};
  c.obs_flat_dim = 4;
  c.obs_feat_dim = 8;
  c.coord_hidden = 8;
  c.coord_feat_dim = 4;
  c.channels = {4};
  c.emb_dim = 8;
  c.groups = 2;
  c.diffusion_steps = 10;
  return c;
}

PipelineConfig FastConfig() {
  PipelineConfig c;
  c.video_sampler.steps = 2;
  c.policy_sampler.steps = 2;
  return c;
}

struct TinyModels {
  TinyModels() : video(TinyVideo()), policy(TinyPolicy()) {
    Rng rng(1);
    for (size_t i = 0; i < video.params().size(); ++i) {
      for (auto& v : video.params().at(i).mutable_value().storage()) v += 0.05 * rng.Normal();
    }
    for (size_t i = 0; i < policy.params().size(); ++i) {
      for (auto& v : policy.params().at(i).mutable_value().storage()) v += 0.05 * rng.Normal();
    }
  }
  Models view() const { return {&video, &policy}; }
  videodiff::VideoModel video;
  policy::PolicyModel policy;
};

class ScriptedValidator : public VideoValidator {
 public:
  explicit ScriptedValidator(bool accept) : accept_(accept) {}
  Verdict Validate(const videodiff::VideoClip& clip, const PlanTable&) override {
    ++calls;
    last_first_frame = clip.frames[0];
    return {accept_, static_cast<double>(calls), accept_ ? "" : "scripted"};
  }
  int calls = 0;
  Frame last_first_frame;

 private:
  bool accept_;
};

class CannedClient : public PlanOracleClient {
 public:
  explicit CannedClient(std::string reply) : reply_(std::move(reply)) {}
  using PlanOracleClient::Complete;
  std::string Complete(const std::string& prompt, const std::vector<std::string>& images) override {
    ++calls;
    last_prompt = prompt;
    last_images = images.size();
    return reply_;
  }
  int calls = 0;
  std::string last_prompt;
  size_t last_images = 0;

 private:
  std::string reply_;
};

videodiff::VideoClip ExpertClip(TaskId task, int64_t seed) {
  const auto rec = datasetkit::ResampleTrajectory(
      datasetkit::RecordTrajectory(DefaultTaskSpec(task), seed), {});
  const auto set = datasetkit::BuildVideoTrainingSet({rec});
  videodiff::VideoClip clip;
  clip.frames.push_back(set[0].observation);
  for (const Frame& f : set[0].future) clip.frames.push_back(f);
  return clip;
}

PlanTable PlanFor(TaskId task, int64_t seed) {
  const auto s = envsim::Reset(DefaultTaskSpec(task), seed);
  return GeneratePlan(envsim::GetSpatialState(s).delta_p, task);
}

TEST(IsStuckTest, Examples) {
  const std::vector<Vec3> still(24, Vec3(0.3, 0.4, 0.5));
  EXPECT_TRUE(IsStuck(still, false, 24, 0.01));
  EXPECT_FALSE(IsStuck(still, true, 24, 0.01));
  EXPECT_FALSE(IsStuck(std::vector<Vec3>(23, Vec3::Zero()), false, 24, 0.01));
  std::vector<Vec3> moving;
  for (int i = 0; i < 30; ++i) moving.emplace_back(0.02 * i, 0, 0);
  EXPECT_FALSE(IsStuck(moving, false, 24, 0.01));
  // Only the last window counts.
  for (int i = 0; i < 24; ++i) moving.emplace_back(0.9, 0, 0);
  EXPECT_TRUE(IsStuck(moving, false, 24, 0.01));
}

TEST(IsStuckTest, JitterBelowThresholdStillCounts) {
  Rng rng(5);
  std::vector<Vec3> h;
  for (int i = 0; i < 24; ++i) {
    h.emplace_back(0.5 + 0.002 * rng.Uniform(), 0.5 + 0.002 * rng.Uniform(), 0.5);
  }
  EXPECT_TRUE(IsStuck(h, false, 24, 0.01));
  h[10].x() += 0.02;
  EXPECT_FALSE(IsStuck(h, false, 24, 0.01));
}

TEST(RuleValidatorTest, AcceptsExpertClips) {
  RuleVideoValidator v;
  for (TaskId task : kAllTasks) {
    for (int64_t seed = 0; seed < 5; ++seed) {
      const Verdict verdict = v.Validate(ExpertClip(task, seed), PlanFor(task, seed));
      EXPECT_TRUE(verdict.accept) << TaskName(task) << " " << seed << ": " << verdict.reason;
    }
  }
}

TEST(RuleValidatorTest, RejectsVanishingObject) {
  RuleVideoValidator v;
  videodiff::VideoClip clip = ExpertClip(TaskId::kPush, 0);
  for (int k = 4; k < 8; ++k) {
    Frame& f = clip.frames[k];
    for (int r = 0; r < f.height; ++r) {
      for (int c = 0; c < f.width; ++c) {
        if (envsim::IsObjectPixel(f, r, c)) {
          for (int ch = 0; ch < 3; ++ch) f.at(r, c, ch) = 0.12;
        }
      }
    }
  }
  const Verdict verdict = v.Validate(clip, PlanFor(TaskId::kPush, 0));
  EXPECT_FALSE(verdict.accept);
}

TEST(RuleValidatorTest, RejectsAStaticClip) {
  RuleVideoValidator v;
  videodiff::VideoClip clip = ExpertClip(TaskId::kReach, 1);
  for (int k = 1; k < 8; ++k) clip.frames[k] = clip.frames[0];
  EXPECT_FALSE(v.Validate(clip, PlanFor(TaskId::kReach, 1)).accept);
  clip.frames.pop_back();
  EXPECT_THROW(v.Validate(clip, PlanFor(TaskId::kReach, 1)), ShapeError);
}

TEST(RemoteValidatorTest, StrictAcceptReject) {
  const videodiff::VideoClip clip = ExpertClip(TaskId::kReach, 0);
  const PlanTable plan = PlanFor(TaskId::kReach, 0);
  {
    CannedClient client(" Accept\n");
    RemoteVideoValidator v(client);
    EXPECT_TRUE(v.Validate(clip, plan).accept);
    EXPECT_EQ(client.calls, 1);
    EXPECT_EQ(client.last_images, 8u);
    EXPECT_NE(client.last_prompt.find("move"), std::string::npos);
  }
  {
    CannedClient client("Reject");
    RemoteVideoValidator v(client);
    EXPECT_FALSE(v.Validate(clip, plan).accept);
    EXPECT_EQ(client.calls, 1);
  }
  {
    CannedClient client("Accept, looks fine");
    RemoteVideoValidator v(client, 2);
    EXPECT_FALSE(v.Validate(clip, plan).accept);
    EXPECT_EQ(client.calls, 3);
  }
}

TEST(EncodePpmTest, HeaderAndSize) {
  Frame f(2, 3, 1.0);
  const std::string ppm = EncodePpm(f);
  EXPECT_EQ(ppm.rfind("P6\n3 2\n255\n", 0), 0u);
  EXPECT_EQ(ppm.size(), 11u + 18u);
  EXPECT_EQ(static_cast<unsigned char>(ppm.back()), 255);
}

TEST(GenerateValidatedTest, AttemptBounds) {
  TinyModels m;
  const PipelineConfig cfg = FastConfig();
  const Frame obs = envsim::Render(envsim::Reset(DefaultTaskSpec(TaskId::kReach, kRes, kRes), 0));
  const PlanTable plan = GeneratePlan(Vec3(0.1, 0.0, -0.1), TaskId::kReach);
  {
    ScriptedValidator accept(true);
    std::vector<Event> events;
    const auto g = GenerateValidated(m.video, obs, obs, TaskId::kReach, plan, accept, cfg, 7, &events);
    EXPECT_EQ(accept.calls, 1);
    EXPECT_EQ(g.attempts, 1);
    EXPECT_TRUE(g.validated);
    EXPECT_EQ(g.clip.frames.size(), 8u);
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[0].kind, EventKind::kGenerate);
    EXPECT_EQ(events[1].kind, EventKind::kValidate);
  }
  {
    ScriptedValidator reject(false);
    const auto a = GenerateValidated(m.video, obs, obs, TaskId::kReach, plan, reject, cfg, 7);
    EXPECT_EQ(reject.calls, cfg.regen_max);
    EXPECT_EQ(a.attempts, cfg.regen_max);
    EXPECT_FALSE(a.validated);
    ScriptedValidator again(false);
    const auto b = GenerateValidated(m.video, obs, obs, TaskId::kReach, plan, again, cfg, 7);
    for (int k = 0; k < 8; ++k) EXPECT_EQ(a.clip.frames[k], b.clip.frames[k]);
  }
}

TEST(GenerateValidatedTest, ValidatorSeesTheUnmaskedObservation) {
  TinyModels m;
  const Frame obs = envsim::Render(envsim::Reset(DefaultTaskSpec(TaskId::kReach, kRes, kRes), 0));
  const Frame masked = videodiff::MaskInput(obs, 0.25, 3);
  ScriptedValidator accept(true);
  const auto g = GenerateValidated(m.video, obs, masked, TaskId::kReach,
                                   GeneratePlan(Vec3(0.1, 0, 0), TaskId::kReach), accept,
                                   FastConfig(), 1);
  EXPECT_EQ(accept.last_first_frame, obs);
  EXPECT_EQ(g.clip.frames[0], obs);
}

TEST(PipelineConfigTest, Validation) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.regen_max = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.mask_ratio = 1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.stuck_delta = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(RunEpisodeTest, MissingOrMismatchedModelsAreConfigErrors) {
  TinyModels m;
  const TaskSpec task = DefaultTaskSpec(TaskId::kReach, kRes, kRes);
  EXPECT_THROW(RunEpisode(task, 0, {&m.video, nullptr}, FastConfig()), ConfigError);
  EXPECT_THROW(RunEpisode(task, 0, {nullptr, &m.policy}, FastConfig()), ConfigError);
  EXPECT_THROW(RunEpisode(DefaultTaskSpec(TaskId::kReach), 0, m.view(), FastConfig()),
               ConfigError);
}

size_t IndexOf(const std::vector<Event>& events, EventKind kind, size_t from = 0) {
  for (size_t i = from; i < events.size(); ++i) {
    if (events[i].kind == kind) return i;
  }
  return events.size();
}

TEST(RunEpisodeTest, StallTriggersReplansInOrder) {
  TinyModels m;
  TaskSpec task = DefaultTaskSpec(TaskId::kReach, kRes, kRes);
  PipelineConfig cfg = FastConfig();
  StallingEnvironment env(0, 1000);
  const EpisodeReport r = RunEpisode(task, 3, m.view(), cfg, {&env});
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.steps, task.max_steps);
  EXPECT_EQ(r.replans, task.max_steps / cfg.stuck_window);
  EXPECT_EQ(r.regenerations, r.replans);
  EXPECT_LE(r.generation_attempts, cfg.regen_max * (1 + r.replans));
  EXPECT_EQ(static_cast<int>(r.match_scores.size()), r.steps);

  const auto& ev = r.events;
  const size_t plan = IndexOf(ev, EventKind::kPlan);
  const size_t gen = IndexOf(ev, EventKind::kGenerate, plan);
  const size_t val = IndexOf(ev, EventKind::kValidate, gen);
  const size_t enc = IndexOf(ev, EventKind::kEncode, val);
  const size_t act = IndexOf(ev, EventKind::kAct, enc);
  const size_t stuck = IndexOf(ev, EventKind::kStuck, act);
  const size_t refine = IndexOf(ev, EventKind::kRefine, stuck);
  const size_t regen = IndexOf(ev, EventKind::kRegenerate, refine);
  EXPECT_EQ(plan, 0u);
  EXPECT_LT(regen, ev.size());
  EXPECT_LT(IndexOf(ev, EventKind::kGenerate, regen), ev.size());
  // Every refine directly follows a stuck evaluation.
  int stucks = 0;
  for (size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].kind == EventKind::kStuck) ++stucks;
    if (ev[i].kind == EventKind::kRefine) {
      ASSERT_GT(i, 0u);
      EXPECT_EQ(ev[i - 1].kind, EventKind::kStuck);
    }
  }
  EXPECT_EQ(stucks, r.replans);
}

TEST(RunEpisodeTest, ReplayDeterminism) {
  TinyModels m;
  const TaskSpec task = DefaultTaskSpec(TaskId::kPush, kRes, kRes);
  PipelineConfig cfg = FastConfig();
  cfg.mask_ratio = 0.25;
  const EpisodeReport a = RunEpisode(task, 11, m.view(), cfg);
  const EpisodeReport b = RunEpisode(task, 11, m.view(), cfg);
  EXPECT_EQ(ReportJson(a), ReportJson(b));
  EXPECT_EQ(EventLogLines(a.events), EventLogLines(b.events));
  EXPECT_LE(a.steps, task.max_steps);
  cfg.seed = 1;
  EXPECT_NE(EventLogLines(RunEpisode(task, 11, m.view(), cfg).events), EventLogLines(a.events));
}

TEST(RunEpisodeTest, ReportAndLogAreLineJson) {
  TinyModels m;
  const TaskSpec task = DefaultTaskSpec(TaskId::kReach, kRes, kRes);
  const EpisodeReport r = RunEpisode(task, 0, m.view(), FastConfig());
  const std::string json = ReportJson(r);
  EXPECT_EQ(json.find('\n'), std::string::npos);
  EXPECT_NE(json.find("\"task\":\"reach\""), std::string::npos);
  const std::string log = EventLogLines(r.events);
  EXPECT_EQ(static_cast<size_t>(std::count(log.begin(), log.end(), '\n')), r.events.size());
}

}  // namespace
}  // namespace vidplan::pipeline
