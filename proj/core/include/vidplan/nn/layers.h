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

#ifndef VIDPLAN_NN_LAYERS_H_
#define VIDPLAN_NN_LAYERS_H_

#include <string>
#include <utility>
#include <vector>

#include "vidplan/common/rng.h"
#include "vidplan/nn/autograd.h"

namespace vidplan::nn {

// Ordered, named collection of trainable leaves. Order is registration order
// and is what checkpoints, optimizers and EMA shadows index by.
class ParameterSet {
 public:
  Var Add(const std::string& name, Tensor init);

  size_t size() const { return entries_.size(); }
  const std::string& name(size_t i) const { return entries_[i].first; }
  Var& at(size_t i) { return entries_[i].second; }
  const Var& at(size_t i) const { return entries_[i].second; }
  std::vector<Var> vars() const {
    std::vector<Var> out;
    for (const auto& e : entries_) out.push_back(e.second);
    return out;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
  }

  size_t ScalarCount() const;
  void ZeroGrad();
  double GradNorm() const;
  // Scales all grads so that their global L2 norm is at most max_norm.
  double ClipGradNorm(double max_norm);

  std::vector<Tensor> Values() const;
  // Throws ShapeError if names or shapes disagree.
  void LoadValues(const std::vector<Tensor>& values);
  void CopyValuesFrom(const ParameterSet& other);

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases.
Tensor UniformInit(std::vector<int> shape, int fan_in, Rng& rng);
Tensor NormalInit(std::vector<int> shape, double stddev, Rng& rng);

struct LinearLayer {
  Var weight;
  Var bias;

  LinearLayer() = default;
  LinearLayer(ParameterSet& params, const std::string& name, int in, int out,
              Rng& rng, bool zero_init = false);
  Var operator()(const Var& x) const { return Linear(x, weight, bias); }
};

struct ConvLayer {
  Var weight;
  Var bias;
  Conv2dSpec spec;

  ConvLayer() = default;
  // Square-or-rectangular kernel with "same" padding for stride 1.
  ConvLayer(ParameterSet& params, const std::string& name, int in, int out,
            int kernel_h, int kernel_w, int stride_h, int stride_w, Rng& rng,
            bool zero_init = false);
  Var operator()(const Var& x) const { return Conv2d(x, weight, bias, spec); }
};

struct GroupNormLayer {
  Var gamma;
  Var beta;
  int groups = 1;

  GroupNormLayer() = default;
  GroupNormLayer(ParameterSet& params, const std::string& name, int channels,
                 int groups);
  Var operator()(const Var& x) const {
    return ChannelAffine(GroupNorm(x, groups), gamma, beta);
  }
};

// Largest group count <= preferred that divides channels.
int GroupsFor(int channels, int preferred);

// Sinusoidal embedding of integer timesteps: [N, dim] with the first half
// sin and the second half cos over log-spaced frequencies.
Tensor TimestepEmbedding(const std::vector<int>& timesteps, int dim);

}  // namespace vidplan::nn

#endif  // VIDPLAN_NN_LAYERS_H_
