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

#include "vidplan/harness/workflow.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "vidplan/common/binary_io.h"
#include "vidplan/common/error.h"

namespace vidplan::harness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void MakeDirectory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir);
}

std::string ArchiveName(TaskId task, int64_t seed) {
  return std::string(TaskName(task)) + "-" + std::to_string(seed) + ".vpa";
}

template <typename Model, typename Trainer, typename Set>
TrainSummary RunTraining(Model& model, Trainer& trainer, const Set& set, const RunConfig& config,
                         const std::string& signature,
                         const std::string& out_ckpt, const TrainOptions& options) {
  const uint64_t hash = ConfigHash(config);
  if (options.resume && fs::exists(out_ckpt)) {
    const Checkpoint ckpt = LoadCheckpoint(out_ckpt);
    if (ckpt.config_hash != hash) {
      throw ConfigError("refusing to resume " + out_ckpt + ": it was written under config " +
                        HexDigest(ckpt.config_hash) + ", this run is " + HexDigest(hash));
    }
    if constexpr (std::is_same_v<Model, videodiff::VideoModel>) {
      RestoreVideo(ckpt, model, trainer);
    } else {
      RestorePolicy(ckpt, model, trainer);
    }
  }
  const auto save = [&] {
    if constexpr (std::is_same_v<Model, videodiff::VideoModel>) {
      SaveCheckpoint(CaptureVideo(model, trainer, hash, signature), out_ckpt);
    } else {
      SaveCheckpoint(CapturePolicy(model, trainer, hash, signature), out_ckpt);
    }
  };
  const auto t0 = Clock::now();
  const int64_t budget = trainer.config().steps;
  while (trainer.step() < budget) {
    const double loss = trainer.Step(set);
    if (options.on_step) options.on_step(trainer.step(), loss);
    if (options.checkpoint_every > 0 && trainer.step() % options.checkpoint_every == 0) save();
  }
  save();
  TrainSummary s;
  s.steps = trainer.step();
  s.first_window_loss = WindowMean(trainer.loss_history(), true);
  s.last_window_loss = WindowMean(trainer.loss_history(), false);
  s.wall_seconds = SecondsSince(t0);
  return s;
}

Checkpoint LoadFor(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError("missing " + what + " checkpoint: " + path);
  return LoadCheckpoint(path);
}

}  // namespace

std::string SerializeManifest(const Manifest& m) {
  ordered_json j;
  j["config_hash"] = HexDigest(m.config_hash);
  j["resolution"] = {m.height, m.width};
  ordered_json tasks = ordered_json::array();
  for (TaskId t : m.tasks) tasks.push_back(std::string(TaskName(t)));
  j["tasks"] = tasks;
  ordered_json entries = ordered_json::array();
  for (const ManifestEntry& e : m.entries) {
    ordered_json x;
    x["file"] = e.file;
    x["task"] = std::string(TaskName(e.task));
    x["seed"] = e.seed;
    x["length"] = e.length;
    x["success"] = e.success;
    x["fine_intervals"] = e.fine_intervals;
    x["resampled_indices"] = e.resampled_indices;
    entries.push_back(x);
  }
  j["entries"] = entries;
  return j.dump(2) + "\n";
}

Manifest ParseManifest(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    Manifest m;
    m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    const auto res = j.at("resolution").get<std::vector<int>>();
    if (res.size() != 2) throw FormatError("manifest resolution must be [height, width]");
    m.height = res[0];
    m.width = res[1];
    for (const auto& t : j.at("tasks")) m.tasks.push_back(ParseTaskId(t.get<std::string>()));
    for (const auto& x : j.at("entries")) {
      ManifestEntry e;
      e.file = x.at("file").get<std::string>();
      e.task = ParseTaskId(x.at("task").get<std::string>());
      e.seed = x.at("seed").get<int64_t>();
      e.length = x.at("length").get<int>();
      e.success = x.at("success").get<bool>();
      e.fine_intervals = x.at("fine_intervals").get<std::vector<datasetkit::Interval>>();
      e.resampled_indices = x.at("resampled_indices").get<std::vector<int>>();
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

Manifest GenerateData(const RunConfig& config, const std::string& out_dir) {
  config.Validate();
  MakeDirectory(out_dir);
  Manifest m;
  m.config_hash = ConfigHash(config);
  m.height = config.env.height;
  m.width = config.env.width;
  m.tasks = config.env.tasks;
  const auto& seg = config.data.segmentation;
  for (TaskId task : config.env.tasks) {
    const TaskSpec spec = DefaultTaskSpec(task, config.env.height, config.env.width);
    for (int i = 0; i < config.data.episodes_per_task; ++i) {
      const int64_t seed = config.data.first_episode_seed + i;
      const datasetkit::TrajectoryRecord rec = datasetkit::RecordTrajectory(spec, seed);
      ManifestEntry e;
      e.file = ArchiveName(task, seed);
      e.task = task;
      e.seed = seed;
      e.length = rec.length();
      e.success = rec.success;
      e.fine_intervals = datasetkit::DetectFineIntervals(rec.distance, seg);
      e.resampled_indices = datasetkit::ResampleIndices(rec.length(), e.fine_intervals, seg);
      datasetkit::WriteArchive({rec}, (fs::path(out_dir) / e.file).string());
      m.entries.push_back(std::move(e));
    }
  }
  WriteFileBytes((fs::path(out_dir) / kManifestName).string(), SerializeManifest(m));
  return m;
}

Dataset LoadDataset(const RunConfig& config, const std::string& data_dir) {
  Dataset d;
  d.manifest = ParseManifest(ReadFileBytes((fs::path(data_dir) / kManifestName).string()));
  const Manifest& m = d.manifest;
  if (m.height != config.env.height || m.width != config.env.width) {
    throw ValidationError("data resolution " + std::to_string(m.height) + "x" +
                          std::to_string(m.width) + " does not match the config's " +
                          std::to_string(config.env.height) + "x" +
                          std::to_string(config.env.width));
  }
  if (m.tasks != config.env.tasks) {
    throw ValidationError("data task set does not match the config's env.tasks");
  }
  for (const ManifestEntry& e : m.entries) {
    auto recs = datasetkit::ReadArchive((fs::path(data_dir) / e.file).string());
    if (recs.size() != 1 || recs[0].task != e.task || recs[0].seed != e.seed ||
        recs[0].length() != e.length) {
      throw FormatError("archive " + e.file + " disagrees with the manifest");
    }
    if (!e.resampled_indices.empty() && e.resampled_indices.back() >= e.length) {
      throw FormatError("manifest indices for " + e.file + " run past the episode");
    }
    d.records.push_back(std::move(recs[0]));
  }
  if (d.records.empty()) throw ValidationError("the dataset holds no episodes");
  return d;
}

std::vector<videodiff::VideoSample> VideoTrainingSet(const Dataset& data) {
  std::vector<datasetkit::TrajectoryRecord> resampled;
  resampled.reserve(data.records.size());
  for (size_t i = 0; i < data.records.size(); ++i) {
    resampled.push_back(
        datasetkit::SelectFrames(data.records[i], data.manifest.entries[i].resampled_indices));
  }
  return datasetkit::BuildVideoTrainingSet(resampled);
}

std::vector<policy::PolicySample> PolicyTrainingSet(const RunConfig& config, const Dataset& data) {
  return datasetkit::BuildPolicyTrainingSet(data.records, config.PolicySet());
}

double WindowMean(const std::vector<double>& history, bool head, size_t window) {
  const size_t n = std::min(window, history.size());
  if (n == 0) return 0.0;
  const auto begin = head ? history.begin() : history.end() - static_cast<ptrdiff_t>(n);
  return std::accumulate(begin, begin + static_cast<ptrdiff_t>(n), 0.0) / static_cast<double>(n);
}

TrainSummary TrainVideo(const RunConfig& config, const Dataset& data, const std::string& out_ckpt,
                        const TrainOptions& options) {
  config.Validate();
  const auto set = VideoTrainingSet(data);
  videodiff::VideoModel model(config.VideoModel());
  videodiff::VideoTrainer trainer(model, config.VideoTrain());
  return RunTraining(model, trainer, set, config,
                     VideoModelSignature(config), out_ckpt, options);
}

TrainSummary TrainPolicy(const RunConfig& config, const Dataset& data, const std::string& out_ckpt,
                         const TrainOptions& options) {
  config.Validate();
  const auto set = PolicyTrainingSet(config, data);
  policy::PolicyModel model(config.PolicyModel());
  policy::PolicyTrainer trainer(model, config.PolicyTrain());
  return RunTraining(model, trainer, set, config,
                     PolicyModelSignature(config), out_ckpt, options);
}

LoadedModels LoadModels(const RunConfig& config, const std::string& video_ckpt,
                        const std::string& policy_ckpt) {
  const Checkpoint v = LoadFor(video_ckpt, "video-model");
  const Checkpoint p = LoadFor(policy_ckpt, "policy");
  if (v.model_signature != VideoModelSignature(config)) {
    throw ConfigError("video checkpoint " + video_ckpt +
                      " was trained under a different video.model section or resolution");
  }
  if (p.model_signature != PolicyModelSignature(config)) {
    throw ConfigError("policy checkpoint " + policy_ckpt +
                      " was trained under a different policy.model section or resolution");
  }
  LoadedModels m;
  m.video = VideoFromCheckpoint(v, config.VideoModel());
  m.policy = PolicyFromCheckpoint(p, config.PolicyModel());
  m.video_losses = v.loss_history;
  m.policy_losses = p.loss_history;
  return m;
}

std::vector<TaskMetrics> Aggregate(const std::vector<pipeline::EpisodeReport>& episodes) {
  std::vector<TaskMetrics> out;
  for (const auto& e : episodes) {
    auto it = std::find_if(out.begin(), out.end(), [&](const TaskMetrics& t) {
      return t.task == e.task;
    });
    if (it == out.end()) {
      out.push_back({});
      out.back().task = e.task;
      it = out.end() - 1;
    }
    ++it->episodes;
    it->successes += e.success;
    it->mean_steps += e.steps;
    it->mean_replans += e.replans;
  }
  for (auto& t : out) {
    t.success_rate = static_cast<double>(t.successes) / t.episodes;
    t.mean_steps /= t.episodes;
    t.mean_replans /= t.episodes;
  }
  return out;
}

MetricsReport Evaluate(const RunConfig& config, const LoadedModels& models, int episodes) {
  config.Validate();
  if (episodes <= 0) throw ConfigError("the episode count must be positive");
  const auto t0 = Clock::now();
  const pipeline::PipelineConfig pc = config.Pipeline();
  MetricsReport r;
  for (TaskId task : config.env.tasks) {
    const TaskSpec spec = DefaultTaskSpec(task, config.env.height, config.env.width);
    for (int i = 0; i < episodes; ++i) {
      r.episodes.push_back(
          pipeline::RunEpisode(spec, config.pipeline.eval_seed_offset + i, models.view(), pc));
    }
  }
  r.tasks = Aggregate(r.episodes);
  r.video_losses = models.video_losses;
  r.policy_losses = models.policy_losses;
  r.wall_seconds = SecondsSince(t0);
  return r;
}

std::string MetricsLines(const MetricsReport& report) {
  std::string out;
  for (const TaskMetrics& t : report.tasks) {
    ordered_json j;
    j["record"] = "task";
    j["task"] = std::string(TaskName(t.task));
    j["episodes"] = t.episodes;
    j["successes"] = t.successes;
    j["success_rate"] = t.success_rate;
    j["mean_steps"] = t.mean_steps;
    j["mean_replans"] = t.mean_replans;
    out += j.dump() + "\n";
  }
  for (const auto& e : report.episodes) {
    ordered_json j;
    j["record"] = "episode";
    const ordered_json fields = ordered_json::parse(pipeline::ReportJson(e));
    for (const auto& [k, v] : fields.items()) j[k] = v;
    out += j.dump() + "\n";
  }
  ordered_json j;
  j["record"] = "losses";
  j["video"] = report.video_losses;
  j["policy"] = report.policy_losses;
  j["wall_seconds"] = report.wall_seconds;
  out += j.dump() + "\n";
  return out;
}

void WriteEvaluation(const MetricsReport& report, const std::string& out_dir) {
  MakeDirectory(out_dir);
  const fs::path events = fs::path(out_dir) / "events";
  MakeDirectory(events.string());
  WriteFileBytes((fs::path(out_dir) / "metrics.jsonl").string(), MetricsLines(report));
  for (const auto& e : report.episodes) {
    const std::string name = std::string(TaskName(e.task)) + "-" + std::to_string(e.seed) + ".jsonl";
    WriteFileBytes((events / name).string(), pipeline::EventLogLines(e.events));
  }
}

uint64_t ResolveSeed(const std::string& flag_value, uint64_t config_seed) {
  std::string text = flag_value;
  if (text.empty()) {
    const char* env = std::getenv("VIDPLAN_SEED");
    if (env == nullptr || *env == '\0') return config_seed;
    text = env;
  }
  if (!std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
      text.size() > 19) {
    throw ConfigError("seed must be a non-negative integer, got '" + text + "'");
  }
  return std::stoull(text);
}

}  // namespace vidplan::harness
