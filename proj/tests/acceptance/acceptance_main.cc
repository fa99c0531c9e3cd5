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

// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails.
//
//   vidplan_acceptance [cache_dir]
//
// The smoke-trained checkpoints and data live in cache_dir (default
// ./acceptance_cache) and are reused when their config hash still matches.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "grad_check.h"
#include "segmentation_oracle.h"
#include "vidplan/common/binary_io.h"
#include "vidplan/common/rng.h"
#include "vidplan/envsim/env.h"
#include "vidplan/framematch/match.h"
#include "vidplan/harness/workflow.h"
#include "vidplan/nn/optim.h"
#include "vidplan/spatialplan/plan.h"

namespace {

namespace fs = std::filesystem;
using namespace vidplan;
using harness::RunConfig;
using pipeline::EventKind;

// Collects failed sub-checks of one criterion.
class Checks {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void Note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }
  std::string Summary() const {
    std::ostringstream out;
    const auto& items = ok() ? notes_ : failures_;
    for (size_t i = 0; i < items.size(); ++i) out << (i ? "; " : "") << items[i];
    return out.str();
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string Fmt(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

Frame Noise(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Frame f(h, w);
  for (double& p : f.pixels) p = rng.Uniform();
  return f;
}

// Shared state for the model-dependent criteria.
struct SmokeRun {
  RunConfig cfg;
  fs::path dir;
  harness::LoadedModels models;
  harness::TrainSummary video;
  harness::TrainSummary policy;
  std::string error;
};

// Both noise schedules hit their endpoints and decay monotonically.
void Schedules(Checks& c) {
  const DiffusionSchedule v = LinearBetaSchedule(1000, 1e-4, 0.02);
  c.Expect(v.steps() == 1000, "video schedule length");
  c.Expect(std::abs(v.beta(1) - 1e-4) < 1e-12 && std::abs(v.beta(1000) - 0.02) < 1e-12,
           "video endpoints");
  const DiffusionSchedule p = policy::CosineBetaSchedule(100, 1e-4, 0.02);
  c.Expect(p.steps() == 100, "policy schedule length");
  c.Expect(std::abs(p.beta(1) - 1e-4) < 1e-12 && std::abs(p.beta(100) - 0.02) < 1e-12,
           "policy endpoints");
  for (const DiffusionSchedule* s : {&v, &p}) {
    bool mono = s->alpha_bar(0) == 1.0;
    for (int t = 1; t <= s->steps(); ++t) mono = mono && s->alpha_bar(t) < s->alpha_bar(t - 1);
    c.Expect(mono && s->alpha_bar(s->steps()) > 0.0, "alpha_bar strictly decreasing");
  }
  c.Note(Fmt("video beta 1e-4..0.02 over 1000, policy over 100, abar_T %.3g / %.3g",
             v.alpha_bar(1000), p.alpha_bar(100)));
}

// Analytic gradients agree with central differences on small instances.
void Gradients(Checks& c) {
  constexpr double kTol = 1e-3;
  {
    nn::ParameterSet params;
    Rng rng(7);
    conditioning::ConditionEncoder enc(params, "c.", conditioning::ConditionConfig{4, 3}, rng);
    const conditioning::ConditionInput in{
        TaskId::kPush, PlanTable{{{ActionType::kMove, {1, 0, -1}, 0.13},
                                  {ActionType::kPush, {0, 0, 0}, 0.0}}}};
    Rng trng(3);
    const nn::Var target = nn::Var::Leaf(nn::NormalInit({1, 16}, 1.0, trng));
    const auto res = testing::CheckGradients(
        [&] { return nn::MeanSquaredError(enc.Build(in).Flatten(), target); }, params.vars(),
        params.names());
    c.Expect(params.ScalarCount() <= 5000 && res.max_rel_error < kTol,
             "encoder chain " + Fmt("%.2e", res.max_rel_error) + " at " + res.worst);
    c.Note("encoder " + Fmt("%.1e", res.max_rel_error));
  }
  {
    videodiff::VideoModelConfig cfg;
    cfg.height = cfg.width = 4;
    cfg.condition = {4, 3};
    cfg.channels = {4};
    cfg.emb_dim = 8;
    cfg.groups = 2;
    cfg.diffusion_steps = 50;
    cfg.p_drop = 0.5;
    videodiff::VideoModel m(cfg);
    Rng init(5);
    for (size_t i = 0; i < m.params().size(); ++i) {
      for (auto& v : m.params().at(i).mutable_value().storage()) v += 0.1 * init.Normal();
    }
    std::vector<videodiff::VideoSample> batch(2);
    for (int b = 0; b < 2; ++b) {
      batch[b].observation = Noise(4, 4, 10 * b + 1);
      for (int k = 0; k < videodiff::kFutureFrames; ++k) {
        batch[b].future.push_back(Noise(4, 4, 10 * b + 2 + k));
      }
      batch[b].condition = {TaskId::kReach, GeneratePlan({0.1, 0.0, -0.05}, TaskId::kReach)};
    }
    const auto res = testing::CheckGradients(
        [&] {
          Rng rng(99);
          return videodiff::TrainingLoss(m, batch, rng);
        },
        m.params().vars(), m.params().names());
    c.Expect(m.params().ScalarCount() <= 5000 && res.max_rel_error < kTol,
             "video loss " + Fmt("%.2e", res.max_rel_error) + " at " + res.worst);
    c.Note("video " + Fmt("%.1e", res.max_rel_error));
  }
  {
    policy::PolicyConfig cfg;
    cfg.height = cfg.width = 8;
    cfg.horizon = 4;
    cfg.obs_channels = {4, 4};
    cfg.obs_flat_dim = 4;
    cfg.obs_feat_dim = 8;
    cfg.coord_hidden = 8;
    cfg.coord_feat_dim = 4;
    cfg.channels = {4};
    cfg.emb_dim = 8;
    cfg.groups = 2;
    cfg.diffusion_steps = 20;
    cfg.p_drop = 0.5;
    cfg.include_object = true;
    policy::PolicyModel m(cfg);
    Rng init(5);
    for (size_t i = 0; i < m.params().size(); ++i) {
      for (auto& v : m.params().at(i).mutable_value().storage()) v += 0.1 * init.Normal();
    }
    std::vector<policy::PolicySample> batch(3);
    Rng rng(11);
    for (int b = 0; b < 3; ++b) {
      batch[b].input.current = Noise(8, 8, 3 * b + 1);
      batch[b].input.goal = Noise(8, 8, 3 * b + 2);
      batch[b].input.p_ee = Vec3(rng.Uniform(), rng.Uniform(), rng.Uniform());
      batch[b].input.p_obj = Vec3(rng.Uniform(), rng.Uniform(), rng.Uniform());
      for (int i = 0; i < cfg.horizon; ++i) {
        batch[b].actions.push_back({rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1),
                                    rng.Uniform() < 0.5 ? -1.0 : 1.0});
      }
    }
    const auto res = testing::CheckGradients(
        [&] {
          Rng r(17);
          return policy::PolicyLoss(m, batch, r);
        },
        m.params().vars(), m.params().names());
    c.Expect(m.params().ScalarCount() <= 5000 && res.max_rel_error < kTol,
             "policy loss " + Fmt("%.2e", res.max_rel_error) + " at " + res.worst);
    c.Note("policy " + Fmt("%.1e", res.max_rel_error));
  }
}

// Plan listings parse and re-serialize byte-for-byte.
void PlanRoundTrip(Checks& c) {
  const std::string listing =
      "Plan:\n1. move [-1, 0, 0] [0.19]\n2. move [0, 0, -1] [0.21]\n3. push [0, 0, 0] [0.00]";
  const PlanTable expected = GeneratePlan(ComputeOffset({0.19, 0, 0.21}, {0, 0, 0}), TaskId::kPush);
  std::string text = SerializePlan(expected);
  while (!text.empty() && text.back() == '\n') text.pop_back();
  c.Expect(text == listing, "push example listing");
  c.Expect(ParsePlan(listing) == expected, "listing parses to the generated plan");
  Rng rng(500);
  int ok = 0;
  for (int i = 0; i < 500; ++i) {
    const Vec3 d(rng.Uniform(-0.5, 0.5), rng.Uniform(-0.5, 0.5), rng.Uniform(-0.5, 0.5));
    const auto task = static_cast<TaskId>(rng.UniformInt(0, 2));
    const PlanTable plan = GeneratePlan(d, task);
    const std::string s = SerializePlan(plan);
    const PlanTable back = ParsePlan(s);
    ok += back == plan && SerializePlan(back) == s;
  }
  c.Expect(ok == 500, std::to_string(500 - ok) + " of 500 random plans failed to round-trip");
  c.Note("example listing exact; 500/500 random round-trips");
}

// Similarity scoring and goal tracking.
void Matching(Checks& c) {
  const framematch::MatchConfig cfg;
  c.Expect(cfg.w_geo == 0.35 && cfg.w_pos == 0.35 && cfg.w_ssim == 0.2 && cfg.w_flow == 0.1 &&
               cfg.tau == 0.8 && cfg.t_max == 28,
           "default weights, threshold, or patience");
  double worst = 0.0;
  for (uint64_t s = 0; s < 5; ++s) {
    const Frame f = Noise(32, 32, s);
    worst = std::max(worst, std::abs(framematch::CompositeSimilarity(f, f, cfg).total - 1.0));
  }
  for (TaskId t : {TaskId::kReach, TaskId::kPush, TaskId::kPickPlace}) {
    const Frame f = envsim::Render(envsim::Reset(DefaultTaskSpec(t), 4));
    worst = std::max(worst, std::abs(framematch::CompositeSimilarity(f, f, cfg).total - 1.0));
  }
  c.Expect(worst <= 1e-6, "identical frames off by " + Fmt("%.2e", worst));

  std::vector<Frame> clip;
  for (int i = 0; i < 8; ++i) clip.push_back(Noise(16, 16, 10 + i));
  const Frame off = Noise(16, 16, 999);
  framematch::GoalTracker t;
  int advanced_at = -1;
  for (int i = 1; i <= 30 && advanced_at < 0; ++i) {
    const framematch::TrackerStep s = framematch::TrackerUpdate(t, off, clip, cfg);
    if (s.advanced) {
      advanced_at = i;
      c.Expect(s.forced && s.tracker.goal_index == 2, "forced advance to the next goal");
    }
    t = s.tracker;
  }
  c.Expect(advanced_at == 28, "forced advance on miss " + std::to_string(advanced_at));
  c.Note("identical frames within " + Fmt("%.1e", worst) +
         "; weights 0.35/0.35/0.2/0.1, tau 0.8; forced advance on the 28th miss");
}

// Segmentation against the window-search oracle, and resampling density.
void Segmentation(Checks& c) {
  Rng rng(2024);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    datasetkit::SegmentationParams p;
    p.consecutive_frames = static_cast<int>(rng.UniformInt(1, 4));
    p.recovery_needed_frames = static_cast<int>(rng.UniformInt(0, 3));
    p.suppress_single_spike = rng.Bernoulli(0.5);
    p.max_allowed_anomaly = static_cast<int>(rng.UniformInt(0, 2));
    const int n = static_cast<int>(rng.UniformInt(1, 100));
    const double p_below = rng.Uniform(0.2, 0.9);
    std::vector<double> d(n);
    for (double& v : d) {
      v = rng.Bernoulli(p_below) ? rng.Uniform(0.0, 0.05) : rng.Uniform(0.0501, 0.3);
    }
    mismatches += datasetkit::DetectFineIntervals(d, p) != testing::OracleIntervals(d, p);
  }
  c.Expect(mismatches == 0, std::to_string(mismatches) + " of 200 traces disagree with the oracle");
  const datasetkit::SegmentationParams p;
  const auto idx = datasetkit::ResampleIndices(200, {{50, 149}}, p);
  int fine = 0, coarse = 0;
  for (int i : idx) {
    if (i >= 50 && i <= 149) {
      ++fine;
    } else if (i != 199) {
      ++coarse;
    }
  }
  c.Expect(fine == 5 * coarse, "fine " + std::to_string(fine) + " vs coarse " +
                                   std::to_string(coarse) + " per 100 frames");
  c.Note("200/200 traces match; " + std::to_string(fine) + " fine vs " + std::to_string(coarse) +
         " coarse frames per 100");
}

// Generates the smoke data and trains (or resumes) both models under the
// smoke config.
void PrepareSmokeRun(SmokeRun& run, const fs::path& cache) {
  run.cfg = harness::SmokeConfig();
  run.cfg.Validate();
  run.dir = cache / harness::RunDirectoryName(run.cfg);
  fs::create_directories(run.dir);
  const auto progress = [](const char* what) {
    harness::TrainOptions o;
    o.resume = true;
    o.checkpoint_every = 250;
    o.on_step = [what](int64_t step, double loss) {
      if (step % 250 == 0) {
        std::fprintf(stderr, "  %s step %lld loss %.4f\n", what, static_cast<long long>(step), loss);
      }
    };
    return o;
  };
  harness::GenerateData(run.cfg, (run.dir / "data").string());
  const harness::Dataset data = harness::LoadDataset(run.cfg, (run.dir / "data").string());
  run.video = harness::TrainVideo(run.cfg, data, (run.dir / "video.ckpt").string(),
                                  progress("video"));
  run.policy = harness::TrainPolicy(run.cfg, data, (run.dir / "policy.ckpt").string(),
                                    progress("policy"));
  run.models = harness::LoadModels(run.cfg, (run.dir / "video.ckpt").string(),
                                   (run.dir / "policy.ckpt").string());
}

// Smoke training halves the loss; the EMA update rule.
void SmokeTraining(Checks& c, const SmokeRun& run) {
  if (!run.error.empty()) {
    c.Expect(false, run.error);
    return;
  }
  c.Expect(run.cfg.env.height == 32 && run.cfg.env.width == 32 &&
               run.cfg.data.episodes_per_task == 64 &&
               run.cfg.env.tasks == std::vector<TaskId>{TaskId::kReach},
           "smoke setup is 64 reach episodes at 32x32");
  c.Expect(run.video.steps == 2000 && run.policy.steps == 2000, "2000 steps per model");
  const auto ratio = [](const harness::TrainSummary& s) {
    return s.last_window_loss / s.first_window_loss;
  };
  c.Expect(ratio(run.video) < 0.5, "video loss ratio " + Fmt("%.3f", ratio(run.video)));
  c.Expect(ratio(run.policy) < 0.5, "policy loss ratio " + Fmt("%.3f", ratio(run.policy)));

  nn::ParameterSet params;
  Rng rng(1);
  params.Add("w", nn::NormalInit({3, 4}, 1.0, rng));
  nn::Ema ema(params, nn::EmaConfig{0.999, 1, nn::EmaWarmup::kNone});
  const auto before = ema.shadow()[0].storage();
  for (auto& v : params.at(0).mutable_value().storage()) v += rng.Normal();
  ema.MaybeUpdate(params, 1);
  double err = 0.0;
  for (size_t i = 0; i < before.size(); ++i) {
    const double want = 0.999 * before[i] + 0.001 * params.at(0).value()[i];
    err = std::max(err, std::abs(ema.shadow()[0].storage()[i] - want));
  }
  c.Expect(err < 1e-12, "EMA update off by " + Fmt("%.2e", err));
  c.Note(Fmt("video loss %.4f -> ", run.video.first_window_loss) +
         Fmt("%.4f", run.video.last_window_loss) +
         Fmt(", policy %.4f -> ", run.policy.first_window_loss) +
         Fmt("%.4f", run.policy.last_window_loss) + "; EMA rule exact");
}

// DDIM sampling is seed-deterministic, zero guidance is the null branch,
// and clips always hold eight frames.
void Sampling(Checks& c, const SmokeRun& run) {
  if (!run.models.video) {
    c.Expect(false, "no trained video model: " + run.error);
    return;
  }
  const videodiff::VideoModel& m = *run.models.video;
  const TaskSpec spec = DefaultTaskSpec(TaskId::kReach, 32, 32);
  const envsim::EnvState s = envsim::Reset(spec, 1000);
  const Frame obs = envsim::Render(s);
  const conditioning::ConditionInput cond{
      TaskId::kReach, GeneratePlan(ComputeOffset(s.ee_pos, s.obj_pos), TaskId::kReach)};
  videodiff::SamplerConfig sc = run.cfg.video.sampler;
  const videodiff::VideoClip a = videodiff::DdimSample(m, obs, cond, sc, 42);
  const videodiff::VideoClip b = videodiff::DdimSample(m, obs, cond, sc, 42);
  bool same = a.frames.size() == b.frames.size();
  for (size_t k = 0; same && k < a.frames.size(); ++k) same = a.frames[k] == b.frames[k];
  c.Expect(same, "same seed gave different clips");
  c.Expect(a.frames.size() == 8, "clip has " + std::to_string(a.frames.size()) + " frames");
  for (uint64_t seed = 0; seed < 3; ++seed) {
    sc.steps = 5;
    c.Expect(videodiff::DdimSample(m, obs, cond, sc, seed).frames.size() == 8,
             "short-schedule clip length");
  }

  sc.steps = 10;
  sc.guidance = 0.0;
  const videodiff::VideoClip got = videodiff::DdimSample(m, obs, cond, sc, 77);
  const conditioning::GlobalCondition gc = m.encoder().Build(cond);
  Rng rng(77);
  nn::Tensor x({1, 3 * videodiff::kFutureFrames, 32, 32});
  for (auto& v : x.storage()) v = rng.Normal();
  const auto ts = DdimTimesteps(m.schedule().steps(), sc.steps);
  for (size_t k = 0; k < ts.size(); ++k) {
    const int t_prev = k + 1 < ts.size() ? ts[k + 1] : 0;
    x = DdimStep(x, ts[k], t_prev, m.Denoise(x, ts[k], obs, gc, true), m.schedule(),
                            true);
  }
  const auto want = videodiff::TensorToFrames(x);
  double err = 0.0;
  for (int f = 0; f < videodiff::kFutureFrames; ++f) {
    for (size_t i = 0; i < want[f].pixels.size(); ++i) {
      err = std::max(err, std::abs(got.frames[f + 1].pixels[i] - want[f].pixels[i]));
    }
  }
  c.Expect(err <= 1e-6, "guidance 0 differs from the null branch by " + Fmt("%.2e", err));
  c.Note("bitwise repeatable; 8 frames; guidance 0 vs null branch " + Fmt("%.1e", err));
}

size_t IndexOf(const std::vector<pipeline::Event>& ev, EventKind kind, size_t from) {
  for (size_t i = from; i < ev.size(); ++i) {
    if (ev[i].kind == kind) return i;
  }
  return ev.size();
}

int Failed(const harness::MetricsReport& r) {
  int n = 0;
  for (const auto& t : r.tasks) n += t.episodes - t.successes;
  return n;
}

// Closed-loop reach success and the replanning trace under a stall.
void ClosedLoop(Checks& c, const SmokeRun& run) {
  if (!run.models.video) {
    c.Expect(false, "no trained models: " + run.error);
    return;
  }
  const harness::MetricsReport r = harness::Evaluate(run.cfg, run.models, 25);
  const double rate = r.tasks.empty() ? 0.0 : r.tasks[0].success_rate;
  c.Expect(r.tasks.size() == 1 && r.tasks[0].episodes == 25, "25 reach episodes");
  c.Expect(rate >= 0.8, "reach success " + Fmt("%.2f", rate) + " < 0.80");

  const TaskSpec spec = DefaultTaskSpec(TaskId::kReach, 32, 32);
  pipeline::StallingEnvironment env(2, 40);
  const pipeline::EpisodeReport e =
      pipeline::RunEpisode(spec, 1000, run.models.view(), run.cfg.Pipeline(), {&env});
  c.Expect(e.replans >= 1, "stalled episode did not replan");
  const auto& ev = e.events;
  size_t at = 0;
  bool ordered = !ev.empty() && ev[0].kind == EventKind::kPlan;
  for (EventKind k : {EventKind::kGenerate, EventKind::kValidate, EventKind::kEncode,
                      EventKind::kAct, EventKind::kStuck, EventKind::kRefine,
                      EventKind::kRegenerate}) {
    at = IndexOf(ev, k, at);
    ordered = ordered && at < ev.size();
  }
  for (size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].kind == EventKind::kRefine) ordered = ordered && i > 0 && ev[i - 1].kind == EventKind::kStuck;
  }
  c.Expect(ordered, "events out of order");
  c.Note(Fmt("reach %.0f%% over 25 episodes; ", 100 * rate) +
         "stall run: " + std::to_string(e.replans) + " replan(s), events in order");
}

// Masked observations still terminate and mostly succeed.
void Masked(Checks& c, const SmokeRun& run) {
  if (!run.models.video) {
    c.Expect(false, "no trained models: " + run.error);
    return;
  }
  RunConfig cfg = run.cfg;
  cfg.pipeline.mask_ratio = 0.25;
  const harness::MetricsReport r = harness::Evaluate(cfg, run.models, 25);
  const int max_steps = DefaultTaskSpec(TaskId::kReach, 32, 32).max_steps;
  bool terminated = r.episodes.size() == 25;
  for (const auto& e : r.episodes) terminated = terminated && e.steps <= max_steps;
  const double rate = r.tasks.empty() ? 0.0 : r.tasks[0].success_rate;
  c.Expect(terminated, "not every episode terminated within its step budget");
  c.Expect(rate >= 0.6, "masked success " + Fmt("%.2f", rate) + " < 0.60");
  c.Note("25/25 terminated; success " + Fmt("%.0f%%", 100 * rate) + " (" +
         std::to_string(Failed(r)) + " failed)");
}

bool SameTree(const fs::path& a, const fs::path& b, std::string& diff) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  }
  size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) count_b += e.is_regular_file();
  if (files.size() != count_b) {
    diff = "file counts differ";
    return false;
  }
  for (const fs::path& f : files) {
    if (!fs::exists(b / f) || ReadFileBytes((a / f).string()) != ReadFileBytes((b / f).string())) {
      diff = f.string();
      return false;
    }
  }
  return true;
}

// Archives and checkpoints round-trip exactly; data generation is
// reproducible.
void Persistence(Checks& c, const SmokeRun& run, const fs::path& cache) {
  std::vector<datasetkit::TrajectoryRecord> recs;
  for (TaskId t : {TaskId::kReach, TaskId::kPush, TaskId::kPickPlace}) {
    recs.push_back(datasetkit::RecordTrajectory(DefaultTaskSpec(t), 7));
  }
  const std::string bytes = datasetkit::SerializeArchive(recs);
  c.Expect(datasetkit::SerializeArchive(datasetkit::ParseArchive(bytes)) == bytes,
           "archive round-trip");

  if (run.models.video) {
    for (const char* name : {"video.ckpt", "policy.ckpt"}) {
      const std::string raw = ReadFileBytes((run.dir / name).string());
      c.Expect(harness::SerializeCheckpoint(harness::ParseCheckpoint(raw)) == raw,
               std::string(name) + " round-trip");
    }
    const fs::path rerun = cache / "data-rerun";
    fs::remove_all(rerun);
    harness::GenerateData(run.cfg, rerun.string());
    std::string diff;
    c.Expect(SameTree(run.dir / "data", rerun, diff), "gen-data rerun differs at " + diff);
    fs::remove_all(rerun);
  } else {
    c.Expect(false, "no smoke run to compare: " + run.error);
  }
  c.Note("archive and both checkpoints byte-exact; gen-data rerun identical");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path cache = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_cache");
  SmokeRun run;

  struct Criterion {
    const char* name;
    std::function<void(Checks&)> body;
  };
  const std::vector<Criterion> criteria = {
      {"noise schedules", Schedules},
      {"gradient checks", Gradients},
      {"plan round-trip", PlanRoundTrip},
      {"frame matching", Matching},
      {"segmentation", Segmentation},
      {"smoke training",
       [&](Checks& c) {
         try {
           PrepareSmokeRun(run, cache);
         } catch (const std::exception& e) {
           run.error = e.what();
         }
         SmokeTraining(c, run);
       }},
      {"video sampling", [&](Checks& c) { Sampling(c, run); }},
      {"closed loop", [&](Checks& c) { ClosedLoop(c, run); }},
      {"masked observations", [&](Checks& c) { Masked(c, run); }},
      {"persistence", [&](Checks& c) { Persistence(c, run, cache); }},
  };

  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Checks c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].body(c);
    } catch (const std::exception& e) {
      c.Expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !c.ok();
    std::printf("%s  %2zu %-20s %s (%.1fs)\n", c.ok() ? "PASS" : "FAIL", i + 1, criteria[i].name,
                c.Summary().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
