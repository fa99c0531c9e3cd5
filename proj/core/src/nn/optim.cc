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

#include "vidplan/nn/optim.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vidplan/common/error.h"

namespace vidplan::nn {

double LearningRateAt(const AdamWConfig& cfg, int64_t step) {
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) {
    return cfg.lr * static_cast<double>(step + 1) / cfg.warmup_steps;
  }
  if (cfg.total_steps <= cfg.warmup_steps) return cfg.lr;
  const double progress =
      std::clamp(static_cast<double>(step - cfg.warmup_steps) /
                     (cfg.total_steps - cfg.warmup_steps),
                 0.0, 1.0);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return cfg.lr * (cfg.min_lr_ratio + (1.0 - cfg.min_lr_ratio) * cosine);
}

AdamW::AdamW(const ParameterSet& params, AdamWConfig cfg) : cfg_(cfg) {
  for (size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.at(i).shape(), 0.0);
    v_.emplace_back(params.at(i).shape(), 0.0);
  }
}

double AdamW::Step(ParameterSet& params) {
  const double norm = cfg_.max_grad_norm > 0.0
                          ? params.ClipGradNorm(cfg_.max_grad_norm)
                          : params.GradNorm();
  const double lr = LearningRateAt(cfg_, step_);
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (size_t i = 0; i < params.size(); ++i) {
    // A parameter the loss did not reach this step counts as a zero
    // gradient, so the update depends only on the serialized state.
    Var& p = params.at(i);
    Tensor& w = p.mutable_value();
    const bool has_grad = p.has_grad();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (size_t k = 0; k < w.size(); ++k) {
      const double gk = has_grad ? p.grad()[k] : 0.0;
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * w[k]);
    }
  }
  return norm;
}

void AdamW::Serialize(BinaryWriter& out) const {
  out.Put<int64_t>(step_);
  WriteTensors(out, m_);
  WriteTensors(out, v_);
}

void AdamW::Deserialize(BinaryReader& in) {
  step_ = in.Get<int64_t>();
  auto m = ReadTensors(in);
  auto v = ReadTensors(in);
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw FormatError("optimizer state does not match parameter layout");
  }
  for (size_t i = 0; i < m.size(); ++i) {
    if (!m[i].SameShape(m_[i]) || !v[i].SameShape(v_[i])) {
      throw FormatError("optimizer state shape mismatch");
    }
  }
  m_ = std::move(m);
  v_ = std::move(v);
}

void EmaUpdate(std::vector<Tensor>& shadow, const ParameterSet& live,
               double decay) {
  if (shadow.size() != live.size()) throw ShapeError("EMA layout mismatch");
  const double keep = 1.0 - decay;
  for (size_t i = 0; i < shadow.size(); ++i) {
    Tensor& s = shadow[i];
    const Tensor& p = live.at(i).value();
    for (size_t k = 0; k < s.size(); ++k) s[k] = decay * s[k] + keep * p[k];
  }
}

Ema::Ema(const ParameterSet& params, EmaConfig cfg)
    : cfg_(cfg), shadow_(params.Values()) {
  if (cfg_.update_every < 1) throw ConfigError("EMA update_every must be >= 1");
  if (!(cfg_.max_decay >= 0.0 && cfg_.max_decay < 1.0)) {
    throw ConfigError("EMA decay must lie in [0, 1)");
  }
}

double Ema::DecayForNextUpdate(int64_t step) const {
  switch (cfg_.warmup) {
    case EmaWarmup::kNone:
      return cfg_.max_decay;
    case EmaWarmup::kInverse: {
      const double n = static_cast<double>(updates_);
      return std::min(cfg_.max_decay, (1.0 + n) / (10.0 + n));
    }
    case EmaWarmup::kPower: {
      const double d =
          1.0 - std::pow(1.0 + static_cast<double>(step), -cfg_.power);
      return std::clamp(d, 0.0, cfg_.max_decay);
    }
  }
  return cfg_.max_decay;
}

bool Ema::MaybeUpdate(const ParameterSet& params, int64_t step) {
  if (step % cfg_.update_every != 0) return false;
  EmaUpdate(shadow_, params, DecayForNextUpdate(step));
  ++updates_;
  return true;
}

void Ema::Serialize(BinaryWriter& out) const {
  out.Put<int64_t>(updates_);
  WriteTensors(out, shadow_);
}

void Ema::Deserialize(BinaryReader& in) {
  updates_ = in.Get<int64_t>();
  auto shadow = ReadTensors(in);
  if (shadow.size() != shadow_.size()) {
    throw FormatError("EMA shadow does not match parameter layout");
  }
  for (size_t i = 0; i < shadow.size(); ++i) {
    if (!shadow[i].SameShape(shadow_[i])) throw FormatError("EMA shape mismatch");
  }
  shadow_ = std::move(shadow);
}

void WriteTensors(BinaryWriter& out, const std::vector<Tensor>& tensors) {
  out.Put<uint32_t>(static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    out.Put<uint32_t>(static_cast<uint32_t>(t.rank()));
    for (int d : t.shape()) out.Put<int32_t>(d);
    out.PutDoubles(t.values());
  }
}

std::vector<Tensor> ReadTensors(BinaryReader& in) {
  const auto count = in.Get<uint32_t>();
  std::vector<Tensor> tensors;
  for (uint32_t i = 0; i < count; ++i) {
    const auto rank = in.Get<uint32_t>();
    if (rank == 0 || rank > 8) throw FormatError("bad tensor rank");
    std::vector<int> shape(rank);
    for (auto& d : shape) {
      d = in.Get<int32_t>();
      if (d <= 0) throw FormatError("bad tensor dimension");
    }
    auto data = in.GetDoubles();
    if (data.size() != Tensor::Count(shape)) {
      throw FormatError("tensor payload does not match its shape");
    }
    tensors.emplace_back(std::move(shape), std::move(data));
  }
  return tensors;
}

}  // namespace vidplan::nn
