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

#include "vidplan/videodiff/video_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vidplan/common/error.h"

namespace vidplan::videodiff {

using nn::Tensor;
using nn::Var;

void VideoModelConfig::Validate() const {
  if (height <= 0 || width <= 0) throw ConfigError("video extent must be positive");
  condition.Validate();
  if (channels.empty()) throw ConfigError("video U-Net needs at least one level");
  if (emb_dim <= 0 || groups <= 0) throw ConfigError("invalid video embedding");
  if (!(p_drop >= 0.0 && p_drop < 1.0)) throw ConfigError("p_drop outside [0, 1)");
  LinearBetaSchedule(diffusion_steps, beta_1, beta_T);  // throws on bad endpoints
  const int f = 1 << (channels.size() - 1);
  if (height % f != 0 || width % f != 0) {
    throw ConfigError("video extent not divisible by the U-Net downsampling");
  }
}

VideoModel::VideoModel(VideoModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.Validate();
  sched_ = LinearBetaSchedule(cfg_.diffusion_steps, cfg_.beta_1, cfg_.beta_T);
  Rng rng(cfg_.init_seed);
  encoder_ = conditioning::ConditionEncoder(params_, "cond.", cfg_.condition, rng);
  const int flat = cfg_.condition.flat_size();
  const int e = cfg_.emb_dim;
  null_cond_ = params_.Add("null_condition", nn::NormalInit({flat}, 1.0, rng));
  time1_ = nn::LinearLayer(params_, "time.0", e, e, rng);
  time2_ = nn::LinearLayer(params_, "time.1", e, e, rng);
  cond1_ = nn::LinearLayer(params_, "cond_mlp.0", flat, e, rng);
  cond2_ = nn::LinearLayer(params_, "cond_mlp.1", e, e, rng);
  nn::UNetConfig ucfg;
  ucfg.in_channels = 3 * kFutureFrames + 3;
  ucfg.out_channels = 3 * kFutureFrames;
  ucfg.channels = cfg_.channels;
  ucfg.emb_dim = e;
  ucfg.groups = cfg_.groups;
  unet_ = nn::ConditionalUNet(params_, "unet.", ucfg, rng);
}

std::unique_ptr<VideoModel> VideoModel::CloneWithValues(
    const std::vector<Tensor>& values) const {
  auto copy = std::make_unique<VideoModel>(cfg_);
  copy->params_.LoadValues(values);
  return copy;
}

Var VideoModel::Denoise(const Var& x_t, const std::vector<int>& timesteps,
                        const Var& i0, const Var& cond_flat) const {
  const int b = x_t.dim(0);
  if (x_t.value().rank() != 4 || x_t.dim(1) != 3 * kFutureFrames ||
      x_t.dim(2) != cfg_.height || x_t.dim(3) != cfg_.width) {
    throw ShapeError("video x_t must be [B, 21, " + std::to_string(cfg_.height) +
                     ", " + std::to_string(cfg_.width) + "], got " +
                     x_t.value().ShapeString());
  }
  if (i0.value().rank() != 4 || i0.dim(0) != b || i0.dim(1) != 3 ||
      i0.dim(2) != cfg_.height || i0.dim(3) != cfg_.width) {
    throw ShapeError("observation must be [B, 3, H, W], got " + i0.value().ShapeString());
  }
  if (cond_flat.value().rank() != 2 || cond_flat.dim(0) != b ||
      cond_flat.dim(1) != cfg_.condition.flat_size()) {
    throw ShapeError("condition must be [B, " +
                     std::to_string(cfg_.condition.flat_size()) + "], got " +
                     cond_flat.value().ShapeString());
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
  Var emb = Add(time2_(SiLU(time1_(temb))), cond2_(SiLU(cond1_(cond_flat))));
  return unet_(nn::Concat({x_t, i0}), emb);
}

Tensor VideoModel::Denoise(const Tensor& x_t, int t, const Frame& i0,
                           const conditioning::GlobalCondition& cond,
                           bool use_null) const {
  const int flat = cfg_.condition.flat_size();
  Tensor c = use_null ? null_cond_.value().Reshaped({1, flat})
                      : cond.Flatten().value();
  return Denoise(Var::Leaf(x_t), {t}, Var::Leaf(FramesToTensor({i0})),
                 Var::Leaf(std::move(c)))
      .value();
}

Var VideoModel::EncodeConditions(
    const std::vector<conditioning::ConditionInput>& inputs,
    const std::vector<bool>& drop) const {
  if (drop.size() != inputs.size()) throw ShapeError("drop mask size mismatch");
  Var enc = encoder_.EncodeBatch(inputs);
  if (std::none_of(drop.begin(), drop.end(), [](bool d) { return d; })) return enc;
  return nn::ReplaceRows(enc, null_cond_, drop);
}

std::vector<bool> SampleDropMask(int n, double p, Rng& rng) {
  std::vector<bool> drop(n);
  for (int i = 0; i < n; ++i) drop[i] = rng.Bernoulli(p);
  return drop;
}

Var TrainingLoss(const VideoModel& model, const std::vector<VideoSample>& batch,
                 Rng& rng, LossDraw* draw) {
  if (batch.empty()) throw ShapeError("empty training batch");
  const auto& sched = model.schedule();
  const int b = static_cast<int>(batch.size());
  std::vector<Tensor> x0s, i0s;
  std::vector<conditioning::ConditionInput> conds;
  for (const auto& s : batch) {
    if (static_cast<int>(s.future.size()) != kFutureFrames) {
      throw ShapeError("a training sample needs exactly 7 future frames");
    }
    x0s.push_back(FramesToTensor(s.future));
    i0s.push_back(FramesToTensor({s.observation}));
    conds.push_back(s.condition);
  }
  Tensor x0 = nn::StackBatch(x0s);
  Tensor eps(x0.shape());
  for (auto& v : eps.storage()) v = rng.Normal();
  std::vector<int> ts(b);
  for (int i = 0; i < b; ++i) {
    ts[i] = static_cast<int>(rng.UniformInt(1, sched.steps()));
  }
  const std::vector<bool> drop = SampleDropMask(b, model.config().p_drop, rng);

  Tensor x_t(x0.shape());
  const size_t per = x0.size() / b;
  for (int i = 0; i < b; ++i) {
    const double a = std::sqrt(sched.alpha_bar(ts[i]));
    const double s = std::sqrt(1.0 - sched.alpha_bar(ts[i]));
    for (size_t k = i * per; k < (i + 1) * per; ++k) x_t[k] = a * x0[k] + s * eps[k];
  }
  Var cond = model.EncodeConditions(conds, drop);
  Var pred = model.Denoise(Var::Leaf(std::move(x_t)), ts, Var::Leaf(nn::StackBatch(i0s)), cond);
  if (draw != nullptr) {
    draw->timesteps = ts;
    draw->dropped = drop;
  }
  return nn::MeanSquaredError(pred, Var::Leaf(std::move(eps)));
}

VideoTrainer::VideoTrainer(VideoModel& model, VideoTrainConfig cfg)
    : model_(model),
      cfg_(std::move(cfg)),
      opt_(model.params(), cfg_.optimizer),
      ema_(model.params(), cfg_.ema) {
  if (cfg_.batch_size <= 0 || cfg_.steps < 0) {
    throw ConfigError("video trainer needs a positive batch size");
  }
}

double VideoTrainer::Step(const std::vector<VideoSample>& data) {
  if (data.empty()) throw ConfigError("empty video training set");
  Rng rng(DeriveSeed(cfg_.seed, static_cast<uint64_t>(step_)));
  std::vector<VideoSample> batch;
  batch.reserve(cfg_.batch_size);
  for (int i = 0; i < cfg_.batch_size; ++i) {
    batch.push_back(data[rng.UniformInt(0, static_cast<int64_t>(data.size()) - 1)]);
  }
  model_.params().ZeroGrad();
  Var loss = TrainingLoss(model_, batch, rng);
  const double value = loss.value()[0];
  if (!std::isfinite(value)) {
    throw DivergenceError("video loss became non-finite at step " +
                          std::to_string(step_ + 1));
  }
  loss.Backward();
  opt_.Step(model_.params());
  ++step_;
  ema_.MaybeUpdate(model_.params(), step_);
  history_.push_back(value);
  return value;
}

void VideoTrainer::Train(const std::vector<VideoSample>& data,
                         const std::function<void(int64_t, double)>& on_step) {
  while (step_ < cfg_.steps) {
    const double loss = Step(data);
    if (on_step) on_step(step_, loss);
  }
}

void VideoTrainer::Restore(int64_t step, std::vector<double> history) {
  step_ = step;
  history_ = std::move(history);
}

VideoClip DdimSample(const VideoModel& model, const Frame& i0,
                     const conditioning::GlobalCondition& cond,
                     const SamplerConfig& cfg, uint64_t seed) {
  const auto& mc = model.config();
  if (i0.height != mc.height || i0.width != mc.width) {
    throw ShapeError("observation extent does not match the video model");
  }
  if (!std::isfinite(cfg.guidance)) throw ConfigError("guidance must be finite");
  nn::NoGradGuard no_grad;
  const auto& sched = model.schedule();
  const std::vector<int> ts = DdimTimesteps(sched.steps(), cfg.steps);
  const int flat = mc.condition.flat_size();

  Rng rng(seed);
  Tensor x({1, 3 * kFutureFrames, mc.height, mc.width});
  for (auto& v : x.storage()) v = rng.Normal();
  const Tensor img = FramesToTensor({i0});
  const Tensor c_row = cond.Flatten().value();
  if (static_cast<int>(c_row.size()) != flat) {
    throw ShapeError("condition size does not match the video model");
  }
  const Tensor n_row = model.null_condition().value().Reshaped({1, flat});

  // guidance 0 / 1 need only one branch; otherwise both run as one batch
  const bool need_null = cfg.guidance != 1.0;
  const bool need_cond = cfg.guidance != 0.0;
  for (size_t k = 0; k < ts.size(); ++k) {
    const int t = ts[k];
    const int t_prev = k + 1 < ts.size() ? ts[k + 1] : 0;
    Tensor eps;
    if (need_null && need_cond) {
      Tensor conds = nn::StackBatch({c_row, n_row});
      Var out = model.Denoise(Var::Leaf(nn::StackBatch({x, x})), {t, t},
                              Var::Leaf(nn::StackBatch({img, img})),
                              Var::Leaf(std::move(conds)));
      const size_t per = x.size();
      Tensor e_c(x.shape()), e_n(x.shape());
      std::copy(out.value().data(), out.value().data() + per, e_c.data());
      std::copy(out.value().data() + per, out.value().data() + 2 * per, e_n.data());
      eps = GuidedEps(e_c, e_n, cfg.guidance);
    } else {
      const Tensor& row = need_cond ? c_row : n_row;
      eps = model.Denoise(Var::Leaf(x), {t}, Var::Leaf(img), Var::Leaf(row)).value();
    }
    x = DdimStep(x, t, t_prev, eps, sched, cfg.clip_x0);
  }
  VideoClip clip;
  clip.frames.reserve(kClipFrames);
  clip.frames.push_back(i0);
  for (auto& f : TensorToFrames(x)) clip.frames.push_back(std::move(f));
  return clip;
}

VideoClip DdimSample(const VideoModel& model, const Frame& i0,
                     const conditioning::ConditionInput& cond,
                     const SamplerConfig& cfg, uint64_t seed) {
  conditioning::GlobalCondition gc;
  {
    nn::NoGradGuard no_grad;
    gc = model.encoder().Build(cond);
  }
  return DdimSample(model, i0, gc, cfg, seed);
}

Frame MaskInput(const Frame& frame, double ratio, uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw RangeError("mask ratio outside [0, 1)");
  Frame out = frame;
  if (ratio == 0.0 || frame.height == 0 || frame.width == 0) return out;
  const int patch = std::max(1, std::min(frame.height, frame.width) / 8);
  const int gh = (frame.height + patch - 1) / patch;
  const int gw = (frame.width + patch - 1) / patch;
  std::vector<int> cells(gh * gw);
  std::iota(cells.begin(), cells.end(), 0);
  Rng rng(seed);
  // partial Fisher-Yates: the first `count` cells are a uniform subset
  const int count = static_cast<int>(std::lround(ratio * cells.size()));
  for (int i = 0; i < count; ++i) {
    const int j = static_cast<int>(rng.UniformInt(i, static_cast<int64_t>(cells.size()) - 1));
    std::swap(cells[i], cells[j]);
    const int r0 = (cells[i] / gw) * patch, c0 = (cells[i] % gw) * patch;
    for (int r = r0; r < std::min(r0 + patch, frame.height); ++r) {
      for (int c = c0; c < std::min(c0 + patch, frame.width); ++c) {
        for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = 0.0;
      }
    }
  }
  return out;
}

}  // namespace vidplan::videodiff
