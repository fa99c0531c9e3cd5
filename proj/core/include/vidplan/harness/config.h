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

// One run configuration governs data generation, both training stages, and
// evaluation. It is hashed into every artifact so drift is caught early.

#ifndef VIDPLAN_HARNESS_CONFIG_H_
#define VIDPLAN_HARNESS_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vidplan/actionpolicy/policy.h"
#include "vidplan/datasetkit/dataset.h"
#include "vidplan/pipeline/pipeline.h"
#include "vidplan/videodiff/video_model.h"

namespace vidplan::harness {

struct EnvSection {
  int height = 32;
  int width = 32;
  std::vector<TaskId> tasks = {TaskId::kReach};
};

struct DataSection {
  datasetkit::SegmentationParams segmentation;
  int episodes_per_task = 64;
  int64_t first_episode_seed = 0;
};

// Shared by both models' training loops. The cosine horizon is the step
// budget, so it is not configurable separately. EMA warmup follows each
// model's own default (inverse for video, power for the policy).
struct TrainSection {
  int steps = 2000;
  int batch_size = 8;
  double lr = 1e-3;
  double weight_decay = 1e-6;
  int warmup_steps = 100;
  double min_lr_ratio = 0.1;
  double max_grad_norm = 1.0;
  double ema_decay = 0.999;
  int ema_every = 10;
};

struct VideoSection {
  videodiff::VideoModelConfig model;  // resolution and init seed are derived
  TrainSection train;
  videodiff::SamplerConfig sampler;
};

struct PolicySection {
  policy::PolicyConfig model;  // resolution and init seed are derived
  int goal_window = 20;
  TrainSection train{2000, 32, 1e-3, 1e-6, 100, 0.1, 1.0, 0.9999, 1};
  policy::PolicySamplerConfig sampler;
};

struct PipelineSection {
  int regen_max = 5;
  int stuck_window = 24;
  double stuck_delta = 0.01;
  double mask_ratio = 0.0;
  framematch::MatchConfig match;
  int eval_episodes = 25;
  // Evaluation seeds start here, well clear of the training episode seeds.
  int64_t eval_seed_offset = 1000;
};

struct RunConfig {
  uint64_t seed = 0;
  EnvSection env;
  DataSection data;
  VideoSection video;
  PolicySection policy;
  PipelineSection pipeline;

  // Throws ConfigError naming the first offending field.
  void Validate() const;

  // Fully resolved module configs (resolution and seeds filled in).
  videodiff::VideoModelConfig VideoModel() const;
  videodiff::VideoTrainConfig VideoTrain() const;
  policy::PolicyConfig PolicyModel() const;
  policy::PolicyTrainConfig PolicyTrain() const;
  datasetkit::PolicySetParams PolicySet() const;
  pipeline::PipelineConfig Pipeline() const;
};

// The small configuration the acceptance suite trains and evaluates:
// reach only, 64 episodes at 32x32, a narrow video U-Net, and a policy that
// also sees the object position.
RunConfig SmokeConfig();

// Parses JSON; missing keys keep their defaults, unknown keys at any depth
// are a ConfigError, and the result is validated.
RunConfig ParseRunConfig(const std::string& json_text);
RunConfig LoadRunConfig(const std::string& path);

// Canonical text: every field, keys sorted, two-space indent, trailing
// newline. ParseRunConfig(SerializeRunConfig(c)) reproduces c exactly.
std::string SerializeRunConfig(const RunConfig& config);

// FNV-1a 64 of the canonical text.
uint64_t ConfigHash(const RunConfig& config);
// "run-" followed by the 16-digit hex hash.
std::string RunDirectoryName(const RunConfig& config);

// Canonical text of the model sections only; checkpoints carry it so
// evaluation can refuse weights trained under another architecture.
std::string VideoModelSignature(const RunConfig& config);
std::string PolicyModelSignature(const RunConfig& config);

}  // namespace vidplan::harness

#endif  // VIDPLAN_HARNESS_CONFIG_H_
