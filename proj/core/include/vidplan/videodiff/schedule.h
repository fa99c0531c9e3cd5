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

// Discrete diffusion schedules and the closed-form pieces shared by the
// video and action samplers. Timesteps are 1-based: t = 1..T.

#ifndef VIDPLAN_VIDEODIFF_SCHEDULE_H_
#define VIDPLAN_VIDEODIFF_SCHEDULE_H_

#include <vector>

#include "vidplan/nn/tensor.h"

namespace vidplan {

struct DiffusionSchedule {
  std::vector<double> betas;       // betas[t-1] = beta_t
  std::vector<double> alphas;      // 1 - beta_t
  std::vector<double> alpha_bars;  // prod_{s<=t} alpha_s

  int steps() const { return static_cast<int>(betas.size()); }
  double beta(int t) const { return betas.at(t - 1); }
  // alpha_bar(0) == 1 by convention (the clean end of the chain).
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars.at(t - 1); }
};

// Builds alphas / alpha_bars from betas. Throws ConfigError unless every
// beta lies in (0, 1).
DiffusionSchedule ScheduleFromBetas(std::vector<double> betas);

// beta_t = beta_1 + (t-1)/(T-1) * (beta_T - beta_1).
DiffusionSchedule LinearBetaSchedule(int steps = 1000, double beta_1 = 1e-4,
                                     double beta_T = 0.02);

// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps. Throws ShapeError / RangeError.
nn::Tensor QSample(const nn::Tensor& x0, int t, const nn::Tensor& eps,
                   const DiffusionSchedule& sched);

// (x_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
nn::Tensor PredictX0(const nn::Tensor& x_t, int t, const nn::Tensor& eps,
                     const DiffusionSchedule& sched);

// Deterministic (eta = 0) update from t to t_prev < t given eps_hat. When
// clip_x0 is set the intermediate x0 estimate is clamped to [-1, 1] and eps
// is re-derived from it so the two stay consistent.
nn::Tensor DdimStep(const nn::Tensor& x_t, int t, int t_prev,
                    const nn::Tensor& eps_hat, const DiffusionSchedule& sched,
                    bool clip_x0);

// S timesteps spread uniformly over [1, T], descending, ending at 1.
std::vector<int> DdimTimesteps(int total_steps, int sample_steps);

// eps_null + s * (eps_cond - eps_null).
nn::Tensor GuidedEps(const nn::Tensor& eps_cond, const nn::Tensor& eps_null,
                     double scale);

}  // namespace vidplan

#endif  // VIDPLAN_VIDEODIFF_SCHEDULE_H_
