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

// Diffusion policy: denoises a short action sequence (H x 4) conditioned on
// the current and goal frames stacked on channels and on the end-effector
// coordinate.
//
// The observation encoder is a small strided conv stack read out through
// spatial-softmax keypoints and a flattened linear head; the coordinate
// branch is a two-layer MLP. Their outputs are concatenated into the
// condition vector c, which (with the timestep) drives a 1-D U-Net laid out
// as [N, 4, 1, H].

#ifndef VIDPLAN_ACTIONPOLICY_POLICY_H_
#define VIDPLAN_ACTIONPOLICY_POLICY_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "vidplan/common/frame.h"
#include "vidplan/envsim/env.h"
#include "vidplan/nn/optim.h"
#include "vidplan/nn/unet.h"
#include "vidplan/videodiff/schedule.h"

namespace vidplan::policy {

inline constexpr int kActionDim = 4;
using ActionRow = std::array<double, kActionDim>;
// Normalized to [-1, 1] per dimension: (dx, dy, dz) / delta_max, gripper.
using ActionSequence = std::vector<ActionRow>;

// beta_t = b1 + (bT - b1) * (1 - cos(pi (t-1)/(T-1))) / 2.
DiffusionSchedule CosineBetaSchedule(int steps = 100, double beta_1 = 1e-4,
                                     double beta_T = 0.02);

ActionRow NormalizeAction(const envsim::Action& a);
envsim::Action DenormalizeAction(const ActionRow& row);

// Uniform over [i+1, min(i+k, t_end)]. Throws RangeError if i >= t_end or
// k < 1.
int SampleGoalIndex(int i, int t_end, int k, Rng& rng);

struct PolicyConfig {
  int height = 32;
  int width = 32;
  int horizon = 4;
  bool include_object = false;  // append p_obj to the coordinate input
  std::vector<int> obs_channels = {16, 32, 32};  // all but the last stride 2
  int obs_flat_dim = 32;
  int obs_feat_dim = 64;
  int coord_hidden = 64;
  int coord_feat_dim = 32;
  double coord_scale = 4.0;  // applied to (p - 0.5); the workspace is [0,1]^3
  std::vector<int> channels = {32, 64};
  int emb_dim = 64;
  int groups = 8;
  int diffusion_steps = 100;
  double beta_1 = 1e-4;
  double beta_T = 0.02;
  double p_drop = 0.1;
  uint64_t init_seed = 0;

  void Validate() const;  // ConfigError
  int coord_dim() const { return include_object ? 6 : 3; }
  int cond_dim() const { return obs_feat_dim + coord_feat_dim; }
};

struct PolicyInput {
  Frame current;
  Frame goal;
  Vec3 p_ee = Vec3::Zero();
  Vec3 p_obj = Vec3::Zero();  // read only when include_object is set
};

struct PolicySample {
  PolicyInput input;
  ActionSequence actions;  // normalized expert actions, `horizon` rows
};

class PolicyModel {
 public:
  explicit PolicyModel(PolicyConfig cfg);
  PolicyModel(const PolicyModel&) = delete;
  PolicyModel& operator=(const PolicyModel&) = delete;

  const PolicyConfig& config() const { return cfg_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  const DiffusionSchedule& schedule() const { return sched_; }
  const nn::Var& null_condition() const { return null_cond_; }

  std::unique_ptr<PolicyModel> CloneWithValues(
      const std::vector<nn::Tensor>& values) const;

  // Condition vectors c, [B, cond_dim]. Throws ShapeError when frames
  // disagree with each other or with the configured resolution, and
  // RangeError for non-finite coordinates.
  nn::Var EncodeConditions(const std::vector<PolicyInput>& inputs) const;
  nn::Var EncodeCondition(const PolicyInput& input) const;
  // Coordinate branch alone, [B, coord_feat_dim].
  nn::Var EncodeCoordinates(const std::vector<PolicyInput>& inputs) const;

  // a_t [B, 4, 1, H], c [B, cond_dim] -> predicted eps [B, 4, 1, H].
  nn::Var Denoise(const nn::Var& a_t, const std::vector<int>& timesteps,
                  const nn::Var& cond) const;

 private:
  nn::Tensor CoordinateTensor(const std::vector<PolicyInput>& inputs) const;

  PolicyConfig cfg_;
  DiffusionSchedule sched_;
  nn::ParameterSet params_;
  std::vector<nn::ConvLayer> obs_convs_;
  nn::LinearLayer obs_flat_;
  nn::LinearLayer obs_proj_;
  nn::LinearLayer coord1_, coord2_;
  nn::Var null_cond_;
  nn::LinearLayer time1_, time2_;
  nn::LinearLayer cond1_;
  nn::ConditionalUNet unet_;
};

// ActionSequence <-> [1, 4, 1, H].
nn::Tensor ActionsToTensor(const ActionSequence& actions);
ActionSequence TensorToActions(const nn::Tensor& t, int batch_index = 0);

// Denoising MSE on a batch of expert sequences; the condition is replaced
// by the learned null vector with probability p_drop.
nn::Var PolicyLoss(const PolicyModel& model, const std::vector<PolicySample>& batch,
                   Rng& rng);

struct PolicyTrainConfig {
  int steps = 2000;
  int batch_size = 32;
  nn::AdamWConfig optimizer;
  nn::EmaConfig ema{0.9999, 1, nn::EmaWarmup::kPower, 0.75};
  uint64_t seed = 0;
};

class PolicyTrainer {
 public:
  PolicyTrainer(PolicyModel& model, PolicyTrainConfig cfg);

  // One optimizer step; throws DivergenceError on a non-finite loss.
  double Step(const std::vector<PolicySample>& data);
  void Train(const std::vector<PolicySample>& data,
             const std::function<void(int64_t, double)>& on_step = {});

  int64_t step() const { return step_; }
  const std::vector<double>& loss_history() const { return history_; }
  const PolicyTrainConfig& config() const { return cfg_; }
  nn::AdamW& optimizer() { return opt_; }
  nn::Ema& ema() { return ema_; }
  const nn::Ema& ema() const { return ema_; }
  void Restore(int64_t step, std::vector<double> history);

 private:
  PolicyModel& model_;
  PolicyTrainConfig cfg_;
  nn::AdamW opt_;
  nn::Ema ema_;
  int64_t step_ = 0;
  std::vector<double> history_;
};

struct PolicySamplerConfig {
  int steps = 10;
  double guidance = 1.0;
  bool clip_x0 = true;
};

// DDIM over the action tensor; the result is clamped to [-1, 1].
ActionSequence SampleActions(const PolicyModel& model, const PolicyInput& input,
                             const PolicySamplerConfig& cfg, uint64_t seed);

}  // namespace vidplan::policy

#endif  // VIDPLAN_ACTIONPOLICY_POLICY_H_
