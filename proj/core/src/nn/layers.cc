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

#include "vidplan/nn/layers.h"

#include <cmath>

#include "vidplan/common/error.h"

namespace vidplan::nn {

Var ParameterSet::Add(const std::string& name, Tensor init) {
  for (const auto& [existing, _] : entries_) {
    if (existing == name) throw ConfigError("duplicate parameter " + name);
  }
  Var v = Var::Param(std::move(init));
  entries_.emplace_back(name, v);
  return v;
}

size_t ParameterSet::ScalarCount() const {
  size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

void ParameterSet::ZeroGrad() {
  for (auto& e : entries_) e.second.ZeroGrad();
}

double ParameterSet::GradNorm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    if (!e.second.has_grad()) continue;
    for (double g : e.second.grad().storage()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParameterSet::ClipGradNorm(double max_norm) {
  const double norm = GradNorm();
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& e : entries_) {
      if (!e.second.has_grad()) continue;
      for (double& g : e.second.mutable_grad().storage()) g *= s;
    }
  }
  return norm;
}

std::vector<Tensor> ParameterSet::Values() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second.value());
  return out;
}

void ParameterSet::LoadValues(const std::vector<Tensor>& values) {
  if (values.size() != entries_.size()) {
    throw ShapeError("parameter count mismatch: expected " +
                     std::to_string(entries_.size()) + ", got " +
                     std::to_string(values.size()));
  }
  for (size_t i = 0; i < values.size(); ++i) {
    if (!values[i].SameShape(entries_[i].second.value())) {
      throw ShapeError("parameter " + entries_[i].first + " shape mismatch");
    }
    entries_[i].second.mutable_value() = values[i];
  }
}

void ParameterSet::CopyValuesFrom(const ParameterSet& other) {
  LoadValues(other.Values());
}

Tensor UniformInit(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.storage()) v = rng.Uniform(-bound, bound);
  return t;
}

Tensor NormalInit(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = stddev * rng.Normal();
  return t;
}

LinearLayer::LinearLayer(ParameterSet& params, const std::string& name,
                         int in, int out, Rng& rng, bool zero_init) {
  weight = params.Add(name + ".weight", zero_init ? Tensor({out, in})
                                                  : UniformInit({out, in}, in, rng));
  bias = params.Add(name + ".bias",
                    zero_init ? Tensor({out}) : UniformInit({out}, in, rng));
}

ConvLayer::ConvLayer(ParameterSet& params, const std::string& name, int in,
                     int out, int kernel_h, int kernel_w, int stride_h,
                     int stride_w, Rng& rng, bool zero_init) {
  const int fan_in = in * kernel_h * kernel_w;
  weight = params.Add(name + ".weight",
                      zero_init ? Tensor({out, in, kernel_h, kernel_w})
                                : UniformInit({out, in, kernel_h, kernel_w},
                                              fan_in, rng));
  bias = params.Add(name + ".bias", zero_init ? Tensor({out})
                                              : UniformInit({out}, fan_in, rng));
  spec = Conv2dSpec{stride_h, stride_w, kernel_h / 2, kernel_w / 2};
}

GroupNormLayer::GroupNormLayer(ParameterSet& params, const std::string& name,
                               int channels, int groups_in)
    : groups(groups_in) {
  gamma = params.Add(name + ".gamma", Tensor({channels}, 1.0));
  beta = params.Add(name + ".beta", Tensor({channels}, 0.0));
}

int GroupsFor(int channels, int preferred) {
  for (int g = std::min(preferred, channels); g > 1; --g) {
    if (channels % g == 0) return g;
  }
  return 1;
}

Tensor TimestepEmbedding(const std::vector<int>& timesteps, int dim) {
  const int n = static_cast<int>(timesteps.size());
  const int half = dim / 2;
  Tensor out({n, dim});
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < half; ++k) {
      const double freq =
          std::exp(-std::log(10000.0) * k / std::max(1, half - 1));
      const double arg = timesteps[i] * freq;
      out[static_cast<size_t>(i) * dim + k] = std::sin(arg);
      out[static_cast<size_t>(i) * dim + half + k] = std::cos(arg);
    }
  }
  return out;
}

}  // namespace vidplan::nn
