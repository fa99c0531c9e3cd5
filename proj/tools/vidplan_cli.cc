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

// vidplan: data generation, training, evaluation, and diagnostics.
//
// Every stage reads one run config (--config, defaults otherwise); outputs
// land in <runs-dir>/run-<config hash>/ unless a path is given explicitly.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vidplan/common/binary_io.h"
#include "vidplan/common/error.h"
#include "vidplan/envsim/env.h"
#include "vidplan/framematch/match.h"
#include "vidplan/harness/workflow.h"
#include "vidplan/spatialplan/plan.h"

namespace {

namespace fs = std::filesystem;
using namespace vidplan;
using namespace vidplan::harness;

constexpr int kUsageExit = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string seed;
  std::string runs_dir = "runs";
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "Run config (JSON); defaults when omitted");
  cmd->add_option("--seed", c.seed, "Global seed; overrides VIDPLAN_SEED and the config");
  cmd->add_option("--runs-dir", c.runs_dir, "Parent directory of run directories");
}

RunConfig LoadConfig(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : LoadRunConfig(c.config_path);
  cfg.seed = ResolveSeed(c.seed, cfg.seed);
  cfg.Validate();
  return cfg;
}

// Creates the run directory and drops the resolved config next to the
// artifacts it produced.
std::string RunDir(const Common& c, const RunConfig& cfg) {
  const fs::path dir = fs::path(c.runs_dir) / RunDirectoryName(cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  WriteFileBytes((dir / "config.json").string(), SerializeRunConfig(cfg));
  return dir.string();
}

std::string OrDefault(const std::string& value, const std::string& dir, const char* name) {
  return value.empty() ? (fs::path(dir) / name).string() : value;
}

Vec3 ParseVector(const std::string& text, const char* what) {
  std::string s = text;
  for (char& ch : s) {
    if (ch == ',' || ch == '(' || ch == ')' || ch == '[' || ch == ']') ch = ' ';
  }
  std::istringstream in(s);
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!(in >> v[i]) || !std::isfinite(v[i])) {
      throw UsageError(std::string(what) + " must be three numbers like 0.1,0.2,0.3; got '" +
                       text + "'");
    }
  }
  std::string rest;
  if (in >> rest) {
    throw UsageError(std::string(what) + " must be three numbers; got '" + text + "'");
  }
  return v;
}

void PrintSummary(const char* what, const TrainSummary& s) {
  std::printf("{\"model\":\"%s\",\"steps\":%lld,\"first_window_loss\":%.6g,"
              "\"last_window_loss\":%.6g,\"wall_seconds\":%.3f}\n",
              what, static_cast<long long>(s.steps), s.first_window_loss, s.last_window_loss,
              s.wall_seconds);
}

TrainOptions Progress(const char* what, bool resume, int every) {
  TrainOptions o;
  o.resume = resume;
  o.checkpoint_every = every;
  o.on_step = [what](int64_t step, double loss) {
    if (step % 100 == 0) std::fprintf(stderr, "%s step %lld loss %.5f\n", what,
                                      static_cast<long long>(step), loss);
  };
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vidplan: plan-conditioned video generation for manipulation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;
  std::string out, data_dir, video_ckpt, policy_ckpt;
  bool resume = false;
  int checkpoint_every = 0;
  std::optional<int> episodes;
  std::string task_name = "reach";
  int64_t episode_seed = 0;
  std::string ee_text, obj_text;
  std::string frame_a, frame_b;

  auto* gen = app.add_subcommand("gen-data", "Record, segment, and archive expert episodes");
  AddCommon(gen, common);
  gen->add_option("-o,--out", out, "Data directory (default <run>/data)");

  auto* tv = app.add_subcommand("train-video", "Train the plan-conditioned video model");
  auto* tp = app.add_subcommand("train-policy", "Train the action policy");
  for (auto* cmd : {tv, tp}) {
    AddCommon(cmd, common);
    cmd->add_option("-d,--data", data_dir, "Data directory (default <run>/data)");
    cmd->add_option("-o,--out", out, "Checkpoint path (default <run>/<model>.ckpt)");
    cmd->add_flag("--resume", resume, "Continue from the checkpoint at --out");
    cmd->add_option("--checkpoint-every", checkpoint_every, "Also checkpoint every N steps")
        ->check(CLI::NonNegativeNumber);
  }

  auto* ev = app.add_subcommand("eval", "Closed-loop evaluation over seeded episodes");
  auto* ro = app.add_subcommand("rollout", "One episode; prints its event log");
  for (auto* cmd : {ev, ro}) {
    AddCommon(cmd, common);
    cmd->add_option("--video", video_ckpt, "Video checkpoint (default <run>/video.ckpt)");
    cmd->add_option("--policy", policy_ckpt, "Policy checkpoint (default <run>/policy.ckpt)");
  }
  ev->add_option("-n,--episodes", episodes, "Episodes per task (default from the config)")
      ->check(CLI::PositiveNumber);
  ev->add_option("-o,--out", out, "Report directory (default <run>/eval)");
  ro->add_option("-t,--task", task_name, "reach, push, or pick_place");
  ro->add_option("--episode-seed", episode_seed, "Episode seed");

  auto* pl = app.add_subcommand("plan", "Print the rule-based spatial plan for a state");
  pl->add_option("--ee", ee_text, "End-effector position x,y,z")->required();
  pl->add_option("--obj", obj_text, "Object position x,y,z")->required();
  pl->add_option("-t,--task", task_name, "reach, push, or pick_place");

  auto* mt = app.add_subcommand("match", "Frame-similarity breakdown for two images");
  AddCommon(mt, common);
  mt->add_option("frame_a", frame_a, "First image (PPM/PGM)")->required();
  mt->add_option("frame_b", frame_b, "Second image (PPM/PGM)")->required();

  auto* rd = app.add_subcommand("render", "Write the initial frame of an episode as PPM");
  AddCommon(rd, common);
  rd->add_option("-t,--task", task_name, "reach, push, or pick_place");
  rd->add_option("--episode-seed", episode_seed, "Episode seed");
  rd->add_option("-o,--out", out, "Output image")->required();

  auto* pc = app.add_subcommand("print-config", "Print the resolved canonical run config");
  AddCommon(pc, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (pl->parsed()) {
      const Vec3 ee = ParseVector(ee_text, "--ee");
      const Vec3 obj = ParseVector(obj_text, "--obj");
      const std::string text =
          SerializePlan(GeneratePlan(ComputeOffset(ee, obj), ParseTaskId(task_name)));
      std::cout << text << (text.ends_with('\n') ? "" : "\n");
      return 0;
    }

    const RunConfig cfg = LoadConfig(common);
    if (pc->parsed()) {
      std::cout << SerializeRunConfig(cfg);
      return 0;
    }
    if (mt->parsed()) {
      const Frame a = ReadPnm(frame_a);
      const Frame b = ReadPnm(frame_b);
      const auto& m = cfg.pipeline.match;
      const framematch::MatchScore s = framematch::CompositeSimilarity(a, b, m);
      std::printf("geo   %.6f  (weight %.2f)\n", s.geo, m.w_geo);
      std::printf("pos   %.6f  (weight %.2f)\n", s.pos, m.w_pos);
      std::printf("ssim  %.6f  (weight %.2f)\n", s.ssim, m.w_ssim);
      std::printf("flow  %.6f  (weight %.2f)\n", s.flow, m.w_flow);
      std::printf("total %.6f\n", s.total);
      std::printf("%s (tau %.2f)\n", s.total >= m.tau ? "matched" : "not matched", m.tau);
      return 0;
    }
    if (rd->parsed()) {
      const TaskSpec spec = DefaultTaskSpec(ParseTaskId(task_name), cfg.env.height, cfg.env.width);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      WritePpm(envsim::Render(envsim::Reset(spec, episode_seed)), out);
      return 0;
    }

    const std::string run = RunDir(common, cfg);
    std::fprintf(stderr, "run directory %s\n", run.c_str());
    if (gen->parsed()) {
      const Manifest m = GenerateData(cfg, OrDefault(out, run, "data"));
      std::printf("{\"episodes\":%zu,\"data\":\"%s\"}\n", m.entries.size(),
                  OrDefault(out, run, "data").c_str());
      return 0;
    }
    if (tv->parsed() || tp->parsed()) {
      const Dataset d = LoadDataset(cfg, OrDefault(data_dir, run, "data"));
      if (tv->parsed()) {
        PrintSummary("video", TrainVideo(cfg, d, OrDefault(out, run, "video.ckpt"),
                                         Progress("video", resume, checkpoint_every)));
      } else {
        PrintSummary("policy", TrainPolicy(cfg, d, OrDefault(out, run, "policy.ckpt"),
                                           Progress("policy", resume, checkpoint_every)));
      }
      return 0;
    }
    const LoadedModels models = LoadModels(cfg, OrDefault(video_ckpt, run, "video.ckpt"),
                                           OrDefault(policy_ckpt, run, "policy.ckpt"));
    if (ev->parsed()) {
      const MetricsReport r = Evaluate(cfg, models, episodes.value_or(cfg.pipeline.eval_episodes));
      WriteEvaluation(r, OrDefault(out, run, "eval"));
      for (const TaskMetrics& t : r.tasks) {
        std::printf("{\"task\":\"%s\",\"episodes\":%d,\"success_rate\":%.4f,"
                    "\"mean_steps\":%.2f,\"mean_replans\":%.2f}\n",
                    std::string(TaskName(t.task)).c_str(), t.episodes, t.success_rate,
                    t.mean_steps, t.mean_replans);
      }
      return 0;
    }
    if (ro->parsed()) {
      const TaskSpec spec = DefaultTaskSpec(ParseTaskId(task_name), cfg.env.height, cfg.env.width);
      const pipeline::EpisodeReport r =
          pipeline::RunEpisode(spec, episode_seed, models.view(), cfg.Pipeline());
      std::cout << pipeline::EventLogLines(r.events) << pipeline::ReportJson(r) << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsageExit;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const vidplan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
