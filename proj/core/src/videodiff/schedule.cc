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

#include "vidplan/videodiff/schedule.h"

#include <algorithm>
#include <cmath>

#include "vidplan/common/error.h"

namespace vidplan {

DiffusionSchedule ScheduleFromBetas(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("empty beta schedule");
  DiffusionSchedule s;
  s.alphas.reserve(betas.size());
  s.alpha_bars.reserve(betas.size());
  double prod = 1.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("beta outside (0, 1)");
    s.alphas.push_back(1.0 - b);
    prod *= 1.0 - b;
    s.alpha_bars.push_back(prod);
  }
  s.betas = std::move(betas);
  return s;
}

DiffusionSchedule LinearBetaSchedule(int steps, double beta_1, double beta_T) {
  if (steps < 2) throw ConfigError("diffusion schedule needs >= 2 steps");
  if (!(beta_1 > 0.0 && beta_1 <= beta_T && beta_T < 1.0)) {
    throw ConfigError("linear schedule needs 0 < beta_1 <= beta_T < 1");
  }
  std::vector<double> betas(steps);
  for (int t = 1; t <= steps; ++t) {
    betas[t - 1] =
        beta_1 + static_cast<double>(t - 1) / (steps - 1) * (beta_T - beta_1);
  }
  // pin the endpoint against rounding in the interpolation
  betas.back() = beta_T;
  return ScheduleFromBetas(std::move(betas));
}

namespace {

void CheckTimestep(int t, const DiffusionSchedule& sched) {
  if (t < 1 || t > sched.steps()) {
    throw RangeError("timestep " + std::to_string(t) + " outside [1, " +
                     std::to_string(sched.steps()) + "]");
  }
}

void CheckShapes(const nn::Tensor& a, const nn::Tensor& b, const char* op) {
  if (!a.SameShape(b)) {
    throw ShapeError(std::string(op) + ": " + a.ShapeString() + " vs " +
                     b.ShapeString());
  }
}

}  // namespace

nn::Tensor QSample(const nn::Tensor& x0, int t, const nn::Tensor& eps,
                   const DiffusionSchedule& sched) {
  CheckTimestep(t, sched);
  CheckShapes(x0, eps, "QSample");
  const double a = std::sqrt(sched.alpha_bar(t));
  const double s = std::sqrt(1.0 - sched.alpha_bar(t));
  nn::Tensor out(x0.shape());
  for (size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + s * eps[i];
  return out;
}

nn::Tensor PredictX0(const nn::Tensor& x_t, int t, const nn::Tensor& eps,
                     const DiffusionSchedule& sched) {
  CheckTimestep(t, sched);
  CheckShapes(x_t, eps, "PredictX0");
  const double a = std::sqrt(sched.alpha_bar(t));
  const double s = std::sqrt(1.0 - sched.alpha_bar(t));
  nn::Tensor out(x_t.shape());
  for (size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - s * eps[i]) / a;
  return out;
}

nn::Tensor DdimStep(const nn::Tensor& x_t, int t, int t_prev,
                    const nn::Tensor& eps_hat, const DiffusionSchedule& sched,
                    bool clip_x0) {
  if (t_prev < 0 || t_prev >= t) throw RangeError("DDIM needs 0 <= t_prev < t");
  nn::Tensor x0 = PredictX0(x_t, t, eps_hat, sched);
  nn::Tensor eps = eps_hat;
  if (clip_x0) {
    const double a = std::sqrt(sched.alpha_bar(t));
    const double s = std::sqrt(1.0 - sched.alpha_bar(t));
    for (size_t i = 0; i < x0.size(); ++i) {
      const double c = std::clamp(x0[i], -1.0, 1.0);
      if (c != x0[i]) {
        x0[i] = c;
        eps[i] = (x_t[i] - a * c) / s;
      }
    }
  }
  const double ap = std::sqrt(sched.alpha_bar(t_prev));
  const double sp = std::sqrt(1.0 - sched.alpha_bar(t_prev));
  nn::Tensor out(x_t.shape());
  for (size_t i = 0; i < x_t.size(); ++i) out[i] = ap * x0[i] + sp * eps[i];
  return out;
}

std::vector<int> DdimTimesteps(int total_steps, int sample_steps) {
  if (sample_steps < 1 || sample_steps > total_steps) {
    throw ConfigError("sampler steps must lie in [1, T]");
  }
  std::vector<int> ts;
  if (sample_steps == 1) return {total_steps};
  for (int i = sample_steps - 1; i >= 0; --i) {
    const double pos = 1.0 + static_cast<double>(i) * (total_steps - 1) /
                                 (sample_steps - 1);
    const int t = static_cast<int>(std::lround(pos));
    if (ts.empty() || t < ts.back()) ts.push_back(t);
  }
  return ts;
}

nn::Tensor GuidedEps(const nn::Tensor& eps_cond, const nn::Tensor& eps_null,
                     double scale) {
  CheckShapes(eps_cond, eps_null, "GuidedEps");
  nn::Tensor out(eps_cond.shape());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = eps_null[i] + scale * (eps_cond[i] - eps_null[i]);
  }
  return out;
}

}  // namespace vidplan
