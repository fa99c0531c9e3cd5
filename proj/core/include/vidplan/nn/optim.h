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

#ifndef VIDPLAN_NN_OPTIM_H_
#define VIDPLAN_NN_OPTIM_H_

#include <cstdint>
#include <vector>

#include "vidplan/common/binary_io.h"
#include "vidplan/nn/layers.h"

namespace vidplan::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;
  int warmup_steps = 0;
  // Cosine annealing horizon; 0 keeps the rate constant after warmup.
  int total_steps = 0;
  double min_lr_ratio = 0.0;
  double max_grad_norm = 1.0;  // <= 0 disables clipping
};

// Linear warmup followed by cosine annealing.
double LearningRateAt(const AdamWConfig& cfg, int64_t step);

class AdamW {
 public:
  AdamW(const ParameterSet& params, AdamWConfig cfg);

  // Applies one update from the accumulated grads. Returns the grad norm
  // before clipping.
  double Step(ParameterSet& params);

  int64_t step() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }

  void Serialize(BinaryWriter& out) const;
  void Deserialize(BinaryReader& in);

 private:
  AdamWConfig cfg_;
  int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// shadow <- decay * shadow + (1 - decay) * live, elementwise.
void EmaUpdate(std::vector<Tensor>& shadow, const ParameterSet& live,
               double decay);

enum class EmaWarmup {
  kNone,     // constant decay
  kInverse,  // min(max_decay, (1 + n) / (10 + n)) with n updates so far
  kPower,    // min(max_decay, 1 - (1 + step)^-power)
};

struct EmaConfig {
  double max_decay = 0.999;
  int update_every = 1;
  EmaWarmup warmup = EmaWarmup::kNone;
  double power = 0.75;
};

class Ema {
 public:
  Ema(const ParameterSet& params, EmaConfig cfg);

  // Called once per optimizer step with the 1-based step count; updates the
  // shadow when step % update_every == 0. Returns whether it updated.
  bool MaybeUpdate(const ParameterSet& params, int64_t step);

  double DecayForNextUpdate(int64_t step) const;

  const std::vector<Tensor>& shadow() const { return shadow_; }
  std::vector<Tensor>& mutable_shadow() { return shadow_; }
  int64_t updates() const { return updates_; }
  const EmaConfig& config() const { return cfg_; }

  void Serialize(BinaryWriter& out) const;
  void Deserialize(BinaryReader& in);

 private:
  EmaConfig cfg_;
  std::vector<Tensor> shadow_;
  int64_t updates_ = 0;
};

void WriteTensors(BinaryWriter& out, const std::vector<Tensor>& tensors);
std::vector<Tensor> ReadTensors(BinaryReader& in);

}  // namespace vidplan::nn

#endif  // VIDPLAN_NN_OPTIM_H_
