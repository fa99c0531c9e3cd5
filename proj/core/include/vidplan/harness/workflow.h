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

// The stages behind the command-line tool: data generation, the two
// training runs, and evaluation. Each is deterministic under a RunConfig.

#ifndef VIDPLAN_HARNESS_WORKFLOW_H_
#define VIDPLAN_HARNESS_WORKFLOW_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vidplan/datasetkit/dataset.h"
#include "vidplan/harness/checkpoint.h"
#include "vidplan/harness/config.h"
#include "vidplan/pipeline/pipeline.h"

namespace vidplan::harness {

inline constexpr const char* kManifestName = "manifest.json";

struct ManifestEntry {
  std::string file;  // relative to the data directory
  TaskId task = TaskId::kReach;
  int64_t seed = 0;
  int length = 0;
  bool success = false;
  std::vector<datasetkit::Interval> fine_intervals;
  std::vector<int> resampled_indices;
};

struct Manifest {
  uint64_t config_hash = 0;
  int height = 0;
  int width = 0;
  std::vector<TaskId> tasks;
  std::vector<ManifestEntry> entries;
};

std::string SerializeManifest(const Manifest& m);
Manifest ParseManifest(const std::string& json_text);  // FormatError

// Records episodes_per_task expert episodes for every task, segments and
// resamples them, and writes one archive per episode (full-rate frames)
// plus manifest.json holding the intervals and kept indices. Creates
// out_dir; IoError when it cannot be written.
Manifest GenerateData(const RunConfig& config, const std::string& out_dir);

struct Dataset {
  Manifest manifest;
  std::vector<datasetkit::TrajectoryRecord> records;  // full rate, manifest order
};

// Reads the manifest and every archive it lists. Throws ValidationError
// when the resolution or task set disagrees with the config, IoError or
// FormatError for missing or damaged files.
Dataset LoadDataset(const RunConfig& config, const std::string& data_dir);

// Video windows come from the resampled records, policy samples from the
// full-rate ones.
std::vector<videodiff::VideoSample> VideoTrainingSet(const Dataset& data);
std::vector<policy::PolicySample> PolicyTrainingSet(const RunConfig& config, const Dataset& data);

struct TrainOptions {
  bool resume = false;          // continue from out_ckpt if it exists
  int checkpoint_every = 0;     // 0: only at the end
  std::function<void(int64_t, double)> on_step;
};

struct TrainSummary {
  int64_t steps = 0;
  double first_window_loss = 0.0;  // mean of the first up-to-100 losses
  double last_window_loss = 0.0;   // mean of the last up-to-100 losses
  double wall_seconds = 0.0;
};

// Mean of the first / last `window` entries (fewer if the history is short).
double WindowMean(const std::vector<double>& history, bool head, size_t window = 100);

// Trains to the configured step budget and writes the checkpoint. On
// resume, a checkpoint whose config hash differs from this config is
// refused with a ConfigError naming both hashes.
TrainSummary TrainVideo(const RunConfig& config, const Dataset& data, const std::string& out_ckpt,
                        const TrainOptions& options = {});
TrainSummary TrainPolicy(const RunConfig& config, const Dataset& data, const std::string& out_ckpt,
                         const TrainOptions& options = {});

struct LoadedModels {
  std::unique_ptr<videodiff::VideoModel> video;
  std::unique_ptr<policy::PolicyModel> policy;
  std::vector<double> video_losses;
  std::vector<double> policy_losses;

  pipeline::Models view() const { return {video.get(), policy.get()}; }
};

// EMA weights of both checkpoints. ConfigError when a file is missing or
// was trained under a different model section or resolution.
LoadedModels LoadModels(const RunConfig& config, const std::string& video_ckpt,
                        const std::string& policy_ckpt);

struct TaskMetrics {
  TaskId task = TaskId::kReach;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
  double mean_replans = 0.0;
};

struct MetricsReport {
  std::vector<TaskMetrics> tasks;
  std::vector<pipeline::EpisodeReport> episodes;
  std::vector<double> video_losses;
  std::vector<double> policy_losses;
  double wall_seconds = 0.0;
};

// Aggregates episode reports per task (in first-seen task order).
std::vector<TaskMetrics> Aggregate(const std::vector<pipeline::EpisodeReport>& episodes);

// Runs `episodes` seeded episodes per configured task, with episode seeds
// eval_seed_offset + i.
MetricsReport Evaluate(const RunConfig& config, const LoadedModels& models, int episodes);

// One JSON object per line: a "task" record per task, an "episode" record
// per episode, and a final "losses" record (curves and wall clock).
std::string MetricsLines(const MetricsReport& report);

// Writes metrics.jsonl plus events/<task>-<seed>.jsonl under out_dir.
void WriteEvaluation(const MetricsReport& report, const std::string& out_dir);

// Seed precedence: explicit flag, then VIDPLAN_SEED, then the config file.
uint64_t ResolveSeed(const std::string& flag_value, uint64_t config_seed);

}  // namespace vidplan::harness

#endif  // VIDPLAN_HARNESS_WORKFLOW_H_
