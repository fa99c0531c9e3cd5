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

// Conditional video diffusion: predicts the 7 future frames of an 8-frame
// clip from the observed frame and a spatial plan.
//
// The future frames are stacked on channels ([B, 21, H, W] in [-1, 1]); the
// observation rides along as 3 extra input channels. Timestep and flattened
// global condition are embedded, summed, and modulate every residual block.

#ifndef VIDPLAN_VIDEODIFF_VIDEO_MODEL_H_
#define VIDPLAN_VIDEODIFF_VIDEO_MODEL_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "vidplan/common/frame.h"
#include "vidplan/conditioning/condition.h"
#include "vidplan/nn/frame_tensor.h"
#include "vidplan/nn/optim.h"
#include "vidplan/nn/unet.h"
#include "vidplan/videodiff/schedule.h"

namespace vidplan::videodiff {

inline constexpr int kFutureFrames = 7;
inline constexpr int kClipFrames = kFutureFrames + 1;

struct VideoModelConfig {
  int height = 32;
  int width = 32;
  conditioning::ConditionConfig condition;
  std::vector<int> channels = {32, 64, 64};
  int emb_dim = 64;
  int groups = 8;
  int diffusion_steps = 1000;
  double beta_1 = 1e-4;
  double beta_T = 0.02;
  double p_drop = 0.1;
  uint64_t init_seed = 0;

  void Validate() const;  // ConfigError
};

// Frame 0 is the observation, frames 1..7 the prediction.
struct VideoClip {
  std::vector<Frame> frames;
};

struct VideoSample {
  Frame observation;
  std::vector<Frame> future;  // exactly kFutureFrames
  conditioning::ConditionInput condition;
};

using nn::FramesToTensor;
using nn::TensorToFrames;

class VideoModel {
 public:
  explicit VideoModel(VideoModelConfig cfg);
  VideoModel(const VideoModel&) = delete;
  VideoModel& operator=(const VideoModel&) = delete;

  const VideoModelConfig& config() const { return cfg_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  const DiffusionSchedule& schedule() const { return sched_; }
  const conditioning::ConditionEncoder& encoder() const { return encoder_; }
  const nn::Var& null_condition() const { return null_cond_; }

  // Fresh model with the same config whose parameters are `values`
  // (typically an EMA shadow).
  std::unique_ptr<VideoModel> CloneWithValues(
      const std::vector<nn::Tensor>& values) const;

  // x_t [B, 21, H, W], i0 [B, 3, H, W], cond_flat [B, (1+N_max)*d].
  nn::Var Denoise(const nn::Var& x_t, const std::vector<int>& timesteps,
                  const nn::Var& i0, const nn::Var& cond_flat) const;

  // Single-instance form; use_null swaps in the learned null condition.
  nn::Tensor Denoise(const nn::Tensor& x_t, int t, const Frame& i0,
                     const conditioning::GlobalCondition& cond,
                     bool use_null) const;

  // Encoded conditions with rows flagged in `drop` replaced by the null
  // condition.
  nn::Var EncodeConditions(const std::vector<conditioning::ConditionInput>& inputs,
                           const std::vector<bool>& drop) const;

 private:
  VideoModelConfig cfg_;
  DiffusionSchedule sched_;
  nn::ParameterSet params_;
  conditioning::ConditionEncoder encoder_;
  nn::Var null_cond_;
  nn::LinearLayer time1_, time2_;
  nn::LinearLayer cond1_, cond2_;
  nn::ConditionalUNet unet_;
};

// Bernoulli(p) flags; a separate function so the dropout rate is testable.
std::vector<bool> SampleDropMask(int n, double p, Rng& rng);

struct LossDraw {
  std::vector<int> timesteps;
  std::vector<bool> dropped;
};

// Mean squared error between sampled noise and the model's prediction
// over a batch; t ~ U{1..T}, eps ~ N(0, I), condition dropped with
// probability p_drop. `draw`, if given, receives the sampled t/drop flags.
nn::Var TrainingLoss(const VideoModel& model, const std::vector<VideoSample>& batch,
                     Rng& rng, LossDraw* draw = nullptr);

struct VideoTrainConfig {
  int steps = 2000;
  int batch_size = 8;
  nn::AdamWConfig optimizer;
  nn::EmaConfig ema{0.999, 10, nn::EmaWarmup::kInverse, 0.75};
  uint64_t seed = 0;
};

class VideoTrainer {
 public:
  VideoTrainer(VideoModel& model, VideoTrainConfig cfg);

  // One optimizer step on a batch drawn (seeded by the step index) from
  // `data`. Returns the loss; throws DivergenceError on a non-finite loss.
  double Step(const std::vector<VideoSample>& data);

  // Runs until step() == cfg.steps. on_step(step, loss) is optional.
  void Train(const std::vector<VideoSample>& data,
             const std::function<void(int64_t, double)>& on_step = {});

  int64_t step() const { return step_; }
  const std::vector<double>& loss_history() const { return history_; }
  const VideoTrainConfig& config() const { return cfg_; }
  nn::AdamW& optimizer() { return opt_; }
  nn::Ema& ema() { return ema_; }
  const nn::Ema& ema() const { return ema_; }

  // Restores counters and history when resuming from a checkpoint.
  void Restore(int64_t step, std::vector<double> history);

 private:
  VideoModel& model_;
  VideoTrainConfig cfg_;
  nn::AdamW opt_;
  nn::Ema ema_;
  int64_t step_ = 0;
  std::vector<double> history_;
};

struct SamplerConfig {
  int steps = 50;
  double guidance = 2.0;
  bool clip_x0 = true;
};

// Deterministic DDIM with classifier-free guidance. Returns I0 followed by
// the 7 generated frames.
VideoClip DdimSample(const VideoModel& model, const Frame& i0,
                     const conditioning::GlobalCondition& cond,
                     const SamplerConfig& cfg, uint64_t seed);
VideoClip DdimSample(const VideoModel& model, const Frame& i0,
                     const conditioning::ConditionInput& cond,
                     const SamplerConfig& cfg, uint64_t seed);

// Zeroes a seeded random subset of square patches covering about `ratio`
// of the pixels. Throws RangeError unless 0 <= ratio < 1.
Frame MaskInput(const Frame& frame, double ratio, uint64_t seed);

}  // namespace vidplan::videodiff

#endif  // VIDPLAN_VIDEODIFF_VIDEO_MODEL_H_
