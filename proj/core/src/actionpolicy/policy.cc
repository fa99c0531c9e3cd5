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

#include "vidplan/actionpolicy/policy.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vidplan/common/error.h"
#include "vidplan/nn/frame_tensor.h"

namespace vidplan::policy {

using nn::Tensor;
using nn::Var;

DiffusionSchedule CosineBetaSchedule(int steps, double beta_1, double beta_T) {
  if (steps < 2) throw ConfigError("diffusion schedule needs >= 2 steps");
  if (!(beta_1 > 0.0 && beta_1 <= beta_T && beta_T < 1.0)) {
    throw ConfigError("cosine schedule needs 0 < beta_1 <= beta_T < 1");
  }
  std::vector<double> betas(steps);
  for (int t = 1; t <= steps; ++t) {
    const double u = static_cast<double>(t - 1) / (steps - 1);
    betas[t - 1] = beta_1 + (beta_T - beta_1) * (1.0 - std::cos(std::numbers::pi * u)) / 2.0;
  }
  betas.front() = beta_1;
  betas.back() = beta_T;
  return ScheduleFromBetas(std::move(betas));
}

ActionRow NormalizeAction(const envsim::Action& a) {
  return {a.delta.x() / envsim::kMaxDelta, a.delta.y() / envsim::kMaxDelta,
          a.delta.z() / envsim::kMaxDelta, a.gripper};
}

envsim::Action DenormalizeAction(const ActionRow& row) {
  envsim::Action a;
  a.delta = Vec3(row[0], row[1], row[2]) * envsim::kMaxDelta;
  a.gripper = row[3];
  return a;
}

int SampleGoalIndex(int i, int t_end, int k, Rng& rng) {
  if (k < 1) throw RangeError("goal window must be >= 1");
  if (i >= t_end) {
    throw RangeError("frame index " + std::to_string(i) + " is not before the last index " +
                     std::to_string(t_end));
  }
  return static_cast<int>(rng.UniformInt(i + 1, std::min(i + k, t_end)));
}

void PolicyConfig::Validate() const {
  if (height <= 0 || width <= 0) throw ConfigError("policy frame extent must be positive");
  if (horizon < 1) throw ConfigError("policy horizon must be >= 1");
  if (obs_channels.empty()) throw ConfigError("policy needs an observation encoder");
  for (int c : obs_channels) {
    if (c <= 0) throw ConfigError("observation encoder width must be positive");
  }
  if (obs_flat_dim <= 0 || obs_feat_dim <= 0 || coord_hidden <= 0 ||
      coord_feat_dim <= 0 || emb_dim <= 0 || groups <= 0) {
    throw ConfigError("policy feature sizes must be positive");
  }
  if (channels.empty()) throw ConfigError("policy U-Net needs at least one level");
  if (horizon % (1 << (channels.size() - 1)) != 0) {
    throw ConfigError("horizon not divisible by the U-Net downsampling");
  }
  if (!(p_drop >= 0.0 && p_drop < 1.0)) throw ConfigError("p_drop outside [0, 1)");
  if (!(coord_scale > 0.0)) throw ConfigError("coord_scale must be positive");
  CosineBetaSchedule(diffusion_steps, beta_1, beta_T);  // throws on bad endpoints
}

PolicyModel::PolicyModel(PolicyConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.Validate();
  sched_ = CosineBetaSchedule(cfg_.diffusion_steps, cfg_.beta_1, cfg_.beta_T);
  Rng rng(cfg_.init_seed);

  int in = 6, h = cfg_.height, w = cfg_.width;
  const int n_conv = static_cast<int>(cfg_.obs_channels.size());
  for (int i = 0; i < n_conv; ++i) {
    const int stride = i + 1 < n_conv ? 2 : 1;
    obs_convs_.emplace_back(params_, "obs.conv" + std::to_string(i), in,
                            cfg_.obs_channels[i], 3, 3, stride, stride, rng);
    in = cfg_.obs_channels[i];
    // "same" padding: out = ceil(in / stride)
    h = (h + stride - 1) / stride;
    w = (w + stride - 1) / stride;
  }
  obs_flat_ = nn::LinearLayer(params_, "obs.flat", in * h * w, cfg_.obs_flat_dim, rng);
  obs_proj_ = nn::LinearLayer(params_, "obs.proj", 2 * in + cfg_.obs_flat_dim,
                              cfg_.obs_feat_dim, rng);
  coord1_ = nn::LinearLayer(params_, "coord.0", cfg_.coord_dim(), cfg_.coord_hidden, rng);
  coord2_ = nn::LinearLayer(params_, "coord.1", cfg_.coord_hidden, cfg_.coord_feat_dim, rng);

  const int e = cfg_.emb_dim;
  null_cond_ = params_.Add("null_condition", nn::NormalInit({cfg_.cond_dim()}, 1.0, rng));
  time1_ = nn::LinearLayer(params_, "time.0", e, e, rng);
  time2_ = nn::LinearLayer(params_, "time.1", e, e, rng);
  cond1_ = nn::LinearLayer(params_, "cond_proj", cfg_.cond_dim(), e, rng);

  nn::UNetConfig ucfg;
  ucfg.in_channels = kActionDim;
  ucfg.out_channels = kActionDim;
  ucfg.channels = cfg_.channels;
  ucfg.emb_dim = e;
  ucfg.kernel_h = 1;
  ucfg.kernel_w = 3;
  ucfg.down_h = 1;
  ucfg.down_w = 2;
  ucfg.groups = cfg_.groups;
  unet_ = nn::ConditionalUNet(params_, "unet.", ucfg, rng);
}

std::unique_ptr<PolicyModel> PolicyModel::CloneWithValues(
    const std::vector<Tensor>& values) const {
  auto copy = std::make_unique<PolicyModel>(cfg_);
  copy->params_.LoadValues(values);
  return copy;
}

Tensor PolicyModel::CoordinateTensor(const std::vector<PolicyInput>& inputs) const {
  const int cd = cfg_.coord_dim();
  Tensor out({static_cast<int>(inputs.size()), cd});
  for (size_t b = 0; b < inputs.size(); ++b) {
    const Vec3& e = inputs[b].p_ee;
    const Vec3& o = inputs[b].p_obj;
    if (!e.allFinite() || (cfg_.include_object && !o.allFinite())) {
      throw RangeError("policy coordinates must be finite");
    }
    for (int k = 0; k < 3; ++k) {
      out[b * cd + k] = (e[k] - 0.5) * cfg_.coord_scale;
      if (cfg_.include_object) out[b * cd + 3 + k] = (o[k] - 0.5) * cfg_.coord_scale;
    }
  }
  return out;
}

Var PolicyModel::EncodeCoordinates(const std::vector<PolicyInput>& inputs) const {
  if (inputs.empty()) throw ShapeError("empty policy batch");
  return coord2_(SiLU(coord1_(Var::Leaf(CoordinateTensor(inputs)))));
}

Var PolicyModel::EncodeConditions(const std::vector<PolicyInput>& inputs) const {
  if (inputs.empty()) throw ShapeError("empty policy batch");
  std::vector<Tensor> stacks;
  stacks.reserve(inputs.size());
  for (const auto& in : inputs) {
    RequireSameShape(in.current, in.goal);
    if (in.current.height != cfg_.height || in.current.width != cfg_.width) {
      throw ShapeError("policy expects " + std::to_string(cfg_.height) + "x" +
                       std::to_string(cfg_.width) + " frames");
    }
    stacks.push_back(nn::FramesToTensor({in.current, in.goal}));
  }
  Var h = Var::Leaf(nn::StackBatch(stacks));
  for (const auto& conv : obs_convs_) h = SiLU(conv(h));
  const int b = h.dim(0);
  Var keypoints = nn::SpatialSoftmax(h);
  Var flat = SiLU(obs_flat_(nn::Reshape(h, {b, h.dim(1) * h.dim(2) * h.dim(3)})));
  Var obs = obs_proj_(nn::Concat({keypoints, flat}));
  return nn::Concat({obs, EncodeCoordinates(inputs)});
}

Var PolicyModel::EncodeCondition(const PolicyInput& input) const {
  return EncodeConditions({input});
}

Var PolicyModel::Denoise(const Var& a_t, const std::vector<int>& timesteps,
                         const Var& cond) const {
  const int b = a_t.dim(0);
  if (a_t.value().rank() != 4 || a_t.dim(1) != kActionDim || a_t.dim(2) != 1 ||
      a_t.dim(3) != cfg_.horizon) {
    throw ShapeError("noised actions must be [B, 4, 1, " + std::to_string(cfg_.horizon) +
                     "], got " + a_t.value().ShapeString());
  }
  if (cond.value().rank() != 2 || cond.dim(0) != b || cond.dim(1) != cfg_.cond_dim()) {
    throw ShapeError("policy condition must be [B, " + std::to_string(cfg_.cond_dim()) +
                     "], got " + cond.value().ShapeString());
  }
  if (static_cast<int>(timesteps.size()) != b) {
    throw ShapeError("one timestep per batch row required");
  }
  for (int t : timesteps) {
    if (t < 1 || t > sched_.steps()) {
      throw RangeError("timestep " + std::to_string(t) + " outside [1, T]");
    }
  }
  Var temb = Var::Leaf(nn::TimestepEmbedding(timesteps, cfg_.emb_dim));
  Var emb = Add(time2_(SiLU(time1_(temb))), cond1_(cond));
  return unet_(a_t, emb);
}

Tensor ActionsToTensor(const ActionSequence& actions) {
  const int h = static_cast<int>(actions.size());
  if (h == 0) throw ShapeError("empty action sequence");
  Tensor t({1, kActionDim, 1, h});
  for (int i = 0; i < h; ++i) {
    for (int d = 0; d < kActionDim; ++d) t[d * h + i] = actions[i][d];
  }
  return t;
}

ActionSequence TensorToActions(const Tensor& t, int batch_index) {
  if (t.rank() != 4 || t.dim(1) != kActionDim || t.dim(2) != 1) {
    throw ShapeError("expected [B, 4, 1, H], got " + t.ShapeString());
  }
  const Tensor row = nn::BatchRow(t, batch_index);
  const int h = t.dim(3);
  ActionSequence out(h);
  for (int i = 0; i < h; ++i) {
    for (int d = 0; d < kActionDim; ++d) out[i][d] = row[d * h + i];
  }
  return out;
}

Var PolicyLoss(const PolicyModel& model, const std::vector<PolicySample>& batch,
               Rng& rng) {
  if (batch.empty()) throw ShapeError("empty policy batch");
  const auto& sched = model.schedule();
  const int b = static_cast<int>(batch.size());
  std::vector<Tensor> rows;
  std::vector<PolicyInput> inputs;
  for (const auto& s : batch) {
    if (static_cast<int>(s.actions.size()) != model.config().horizon) {
      throw ShapeError("expert sequence length differs from the policy horizon");
    }
    rows.push_back(ActionsToTensor(s.actions));
    inputs.push_back(s.input);
  }
  const Tensor a0 = nn::StackBatch(rows);
  Tensor eps(a0.shape());
  for (auto& v : eps.storage()) v = rng.Normal();
  std::vector<int> ts(b);
  for (int i = 0; i < b; ++i) ts[i] = static_cast<int>(rng.UniformInt(1, sched.steps()));
  std::vector<bool> drop(b);
  for (int i = 0; i < b; ++i) drop[i] = rng.Bernoulli(model.config().p_drop);

  Tensor a_t(a0.shape());
  const size_t per = a0.size() / b;
  for (int i = 0; i < b; ++i) {
    const double sa = std::sqrt(sched.alpha_bar(ts[i]));
    const double sn = std::sqrt(1.0 - sched.alpha_bar(ts[i]));
    for (size_t k = i * per; k < (i + 1) * per; ++k) a_t[k] = sa * a0[k] + sn * eps[k];
  }
  Var cond = model.EncodeConditions(inputs);
  if (std::any_of(drop.begin(), drop.end(), [](bool d) { return d; })) {
    cond = nn::ReplaceRows(cond, model.null_condition(), drop);
  }
  Var pred = model.Denoise(Var::Leaf(std::move(a_t)), ts, cond);
  return nn::MeanSquaredError(pred, Var::Leaf(std::move(eps)));
}

PolicyTrainer::PolicyTrainer(PolicyModel& model, PolicyTrainConfig cfg)
    : model_(model),
      cfg_(std::move(cfg)),
      opt_(model.params(), cfg_.optimizer),
      ema_(model.params(), cfg_.ema) {
  if (cfg_.batch_size <= 0 || cfg_.steps < 0) {
    throw ConfigError("policy trainer needs a positive batch size");
  }
}

double PolicyTrainer::Step(const std::vector<PolicySample>& data) {
  if (data.empty()) throw ConfigError("empty policy training set");
  Rng rng(DeriveSeed(cfg_.seed, static_cast<uint64_t>(step_)));
  std::vector<PolicySample> batch;
  batch.reserve(cfg_.batch_size);
  for (int i = 0; i < cfg_.batch_size; ++i) {
    batch.push_back(data[rng.UniformInt(0, static_cast<int64_t>(data.size()) - 1)]);
  }
  model_.params().ZeroGrad();
  Var loss = PolicyLoss(model_, batch, rng);
  const double value = loss.value()[0];
  if (!std::isfinite(value)) {
    throw DivergenceError("policy loss became non-finite at step " +
                          std::to_string(step_ + 1));
  }
  loss.Backward();
  opt_.Step(model_.params());
  ++step_;
  ema_.MaybeUpdate(model_.params(), step_);
  history_.push_back(value);
  return value;
}

void PolicyTrainer::Train(const std::vector<PolicySample>& data,
                          const std::function<void(int64_t, double)>& on_step) {
  while (step_ < cfg_.steps) {
    const double loss = Step(data);
    if (on_step) on_step(step_, loss);
  }
}

void PolicyTrainer::Restore(int64_t step, std::vector<double> history) {
  step_ = step;
  history_ = std::move(history);
}

ActionSequence SampleActions(const PolicyModel& model, const PolicyInput& input,
                             const PolicySamplerConfig& cfg, uint64_t seed) {
  if (!std::isfinite(cfg.guidance)) throw ConfigError("guidance must be finite");
  nn::NoGradGuard no_grad;
  const auto& sched = model.schedule();
  const auto& pc = model.config();
  const std::vector<int> ts = DdimTimesteps(sched.steps(), cfg.steps);
  const int cd = pc.cond_dim();
  const Tensor c_row = model.EncodeCondition(input).value();
  const Tensor n_row = model.null_condition().value().Reshaped({1, cd});

  Rng rng(seed);
  Tensor a({1, kActionDim, 1, pc.horizon});
  for (auto& v : a.storage()) v = rng.Normal();

  const bool need_null = cfg.guidance != 1.0;
  const bool need_cond = cfg.guidance != 0.0;
  for (size_t k = 0; k < ts.size(); ++k) {
    const int t = ts[k];
    const int t_prev = k + 1 < ts.size() ? ts[k + 1] : 0;
    Tensor eps;
    if (need_null && need_cond) {
      Var out = model.Denoise(Var::Leaf(nn::StackBatch({a, a})), {t, t},
                              Var::Leaf(nn::StackBatch({c_row, n_row})));
      eps = GuidedEps(nn::BatchRow(out.value(), 0), nn::BatchRow(out.value(), 1),
                      cfg.guidance);
    } else {
      eps = model.Denoise(Var::Leaf(a), {t}, Var::Leaf(need_cond ? c_row : n_row)).value();
    }
    a = DdimStep(a, t, t_prev, eps, sched, cfg.clip_x0);
  }
  ActionSequence out = TensorToActions(a);
  for (auto& row : out) {
    for (double& v : row) v = std::clamp(v, -1.0, 1.0);
  }
  return out;
}

}  // namespace vidplan::policy
