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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "grad_check.h"
#include "vidplan/common/error.h"
#include "vidplan/videodiff/video_model.h"

namespace vidplan::videodiff {
namespace {

using nn::Tensor;
using nn::Var;
using conditioning::GlobalCondition;

Tensor RandomTensor(std::vector<int> shape, uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = rng.Normal();
  return t;
}

Frame RandomFrame(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Frame f(h, w);
  for (auto& p : f.pixels) p = rng.Uniform();
  return f;
}

// Small enough for exhaustive finite differences.
VideoModelConfig TinyConfig() {
  VideoModelConfig c;
  c.height = 4;
  c.width = 4;
  c.condition = {4, 3};
  c.channels = {4};
  c.emb_dim = 8;
  c.groups = 2;
  c.diffusion_steps = 50;
  return c;
}

VideoSample RandomSample(int h, int w, uint64_t seed) {
  VideoSample s;
  s.observation = RandomFrame(h, w, seed);
  for (int k = 0; k < kFutureFrames; ++k) s.future.push_back(RandomFrame(h, w, seed + 1 + k));
  s.condition = {TaskId::kReach, GeneratePlan({0.1, 0.0, -0.05}, TaskId::kReach)};
  return s;
}

TEST(ScheduleTest, LinearEndpointsAreExact) {
  const DiffusionSchedule s = LinearBetaSchedule(1000, 1e-4, 0.02);
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_EQ(s.beta(1), 1e-4);
  EXPECT_EQ(s.beta(1000), 0.02);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  for (int t = 1; t <= 1000; ++t) {
    EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
    EXPECT_NEAR(s.alphas[t - 1], 1.0 - s.beta(t), 0.0);
  }
  EXPECT_GT(s.alpha_bar(1000), 0.0);
}

TEST(ScheduleTest, MidpointOfOddLengthSchedule) {
  const DiffusionSchedule s = LinearBetaSchedule(3, 0.1, 0.3);
  EXPECT_NEAR(s.beta(2), 0.2, 1e-15);
  EXPECT_NEAR(s.alpha_bar(3), 0.9 * 0.8 * 0.7, 1e-15);
}

TEST(ScheduleTest, RejectsBadArguments) {
  EXPECT_THROW(LinearBetaSchedule(1), ConfigError);
  EXPECT_THROW(LinearBetaSchedule(10, 0.2, 0.1), ConfigError);
  EXPECT_THROW(ScheduleFromBetas({0.1, 1.0}), ConfigError);
}

TEST(ScheduleTest, QSampleValidatesInputs) {
  const DiffusionSchedule s = LinearBetaSchedule();
  const Tensor x0 = RandomTensor({2, 3}, 1);
  EXPECT_THROW(QSample(x0, 10, RandomTensor({3, 2}, 2), s), ShapeError);
  EXPECT_THROW(QSample(x0, 0, RandomTensor({2, 3}, 2), s), RangeError);
  EXPECT_THROW(QSample(x0, 1001, RandomTensor({2, 3}, 2), s), RangeError);
}

TEST(ScheduleTest, QSampleHasTheForwardMarginal) {
  const DiffusionSchedule s = LinearBetaSchedule();
  const int t = 400;
  const Tensor x0({20000}, 0.5);
  const Tensor x = QSample(x0, t, RandomTensor({20000}, 9), s);
  double mean = 0, var = 0;
  for (double v : x.storage()) mean += v;
  mean /= x.size();
  for (double v : x.storage()) var += (v - mean) * (v - mean);
  var /= x.size();
  EXPECT_NEAR(mean, 0.5 * std::sqrt(s.alpha_bar(t)), 0.02);
  EXPECT_NEAR(var, 1.0 - s.alpha_bar(t), 0.03);
}

TEST(ScheduleTest, OneStepDdimWithTrueNoiseRecoversX0) {
  const DiffusionSchedule s = LinearBetaSchedule();
  const Tensor x0 = RandomTensor({3, 5}, 4);
  const Tensor eps = RandomTensor({3, 5}, 5);
  for (int t : {1, 17, 500, 1000}) {
    const Tensor xt = QSample(x0, t, eps, s);
    const Tensor back = DdimStep(xt, t, 0, eps, s, /*clip_x0=*/false);
    for (size_t i = 0; i < x0.size(); ++i) EXPECT_NEAR(back[i], x0[i], 1e-5) << t;
  }
}

TEST(ScheduleTest, DdimTimestepsAreDescendingAndSpanTheChain) {
  const auto ts = DdimTimesteps(1000, 50);
  ASSERT_EQ(ts.size(), 50u);
  EXPECT_EQ(ts.front(), 1000);
  EXPECT_EQ(ts.back(), 1);
  for (size_t i = 1; i < ts.size(); ++i) EXPECT_LT(ts[i], ts[i - 1]);
  EXPECT_EQ(DdimTimesteps(100, 1), std::vector<int>{100});
  EXPECT_THROW(DdimTimesteps(10, 11), ConfigError);
}

TEST(ScheduleTest, GuidanceInterpolates) {
  const Tensor c = RandomTensor({4}, 1), n = RandomTensor({4}, 2);
  const Tensor g0 = GuidedEps(c, n, 0.0), g1 = GuidedEps(c, n, 1.0),
               g2 = GuidedEps(c, n, 2.0);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(g0[i], n[i]);
    EXPECT_NEAR(g1[i], c[i], 1e-15);
    EXPECT_NEAR(g2[i], 2 * c[i] - n[i], 1e-15);
  }
}

TEST(VideoTensorTest, FramesRoundTripThroughTensors) {
  std::vector<Frame> frames = {RandomFrame(4, 6, 1), RandomFrame(4, 6, 2)};
  const Tensor t = FramesToTensor(frames);
  EXPECT_EQ(t.shape(), (std::vector<int>{1, 6, 4, 6}));
  for (double v : t.storage()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  const auto back = TensorToFrames(t);
  ASSERT_EQ(back.size(), 2u);
  for (int f = 0; f < 2; ++f) {
    for (size_t i = 0; i < frames[f].pixels.size(); ++i) {
      EXPECT_NEAR(back[f].pixels[i], frames[f].pixels[i], 1e-12);
    }
  }
}

TEST(VideoModelTest, UntrainedModelPredictsZeroNoise) {
  VideoModel m(TinyConfig());
  const GlobalCondition c = m.encoder().Build(RandomSample(4, 4, 1).condition);
  const Tensor eps = m.Denoise(RandomTensor({1, 21, 4, 4}, 3), 10, RandomFrame(4, 4, 2), c, false);
  for (double v : eps.storage()) EXPECT_EQ(v, 0.0);
}

TEST(VideoModelTest, RejectsMisshapedInputs) {
  VideoModel m(TinyConfig());
  const GlobalCondition c = m.encoder().Build(RandomSample(4, 4, 1).condition);
  EXPECT_THROW(m.Denoise(RandomTensor({1, 20, 4, 4}, 3), 10, RandomFrame(4, 4, 2), c, false),
               ShapeError);
  EXPECT_THROW(m.Denoise(RandomTensor({1, 21, 4, 4}, 3), 0, RandomFrame(4, 4, 2), c, false),
               RangeError);
  VideoModelConfig bad = TinyConfig();
  bad.channels = {4, 4, 4};
  bad.height = 6;
  EXPECT_THROW(VideoModel{bad}, ConfigError);
}

TEST(VideoModelTest, DropMaskRateMatchesProbability) {
  Rng rng(11);
  const auto drop = SampleDropMask(5000, 0.1, rng);
  int nulls = 0;
  for (bool d : drop) nulls += d;
  EXPECT_NEAR(nulls / 5000.0, 0.1, 0.02);
}

TEST(VideoModelTest, DroppedRowsUseTheNullCondition) {
  VideoModel m(TinyConfig());
  const auto s = RandomSample(4, 4, 1);
  const Var enc = m.EncodeConditions({s.condition, s.condition}, {false, true});
  const int flat = m.config().condition.flat_size();
  const Var ref = m.encoder().Build(s.condition).Flatten();
  for (int j = 0; j < flat; ++j) {
    EXPECT_NEAR(enc.value()[j], ref.value()[j], 1e-12);
    EXPECT_EQ(enc.value()[flat + j], m.null_condition().value()[j]);
  }
}

TEST(VideoModelTest, TrainingLossGradientsMatchFiniteDifferences) {
  VideoModelConfig cfg = TinyConfig();
  cfg.p_drop = 0.5;  // exercise both the encoded and null branches
  VideoModel m(cfg);
  ASSERT_LE(m.params().ScalarCount(), 5000u);
  // The zero-initialized head would hide every upstream gradient.
  Rng init(5);
  for (size_t i = 0; i < m.params().size(); ++i) {
    for (auto& v : m.params().at(i).mutable_value().storage()) v += 0.1 * init.Normal();
  }
  const std::vector<VideoSample> batch = {RandomSample(4, 4, 1), RandomSample(4, 4, 20)};
  auto loss = [&] {
    Rng rng(99);
    return TrainingLoss(m, batch, rng);
  };
  LossDraw draw;
  Rng probe(99);
  TrainingLoss(m, batch, probe, &draw);
  const auto res = testing::CheckGradients(loss, m.params().vars(), m.params().names());
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(VideoModelTest, TrainingLossRecordsItsDraws) {
  VideoModel m(TinyConfig());
  LossDraw draw;
  Rng rng(3);
  const Var l = TrainingLoss(m, {RandomSample(4, 4, 1), RandomSample(4, 4, 2)}, rng, &draw);
  ASSERT_EQ(draw.timesteps.size(), 2u);
  for (int t : draw.timesteps) {
    EXPECT_GE(t, 1);
    EXPECT_LE(t, 50);
  }
  EXPECT_EQ(draw.dropped.size(), 2u);
  // an untrained model predicts zero, so the loss is E[eps^2] ~ 1
  EXPECT_NEAR(l.value()[0], 1.0, 0.3);
}

TEST(VideoTrainerTest, NonFiniteLossRaisesDivergence) {
  VideoModel m(TinyConfig());
  VideoTrainConfig tc;
  tc.batch_size = 2;
  VideoTrainer trainer(m, tc);
  const std::vector<VideoSample> data = {RandomSample(4, 4, 1)};
  EXPECT_NO_THROW(trainer.Step(data));
  m.params().at(0).mutable_value()[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(trainer.Step(data), DivergenceError);
}

TEST(VideoTrainerTest, StepsAreDeterministicAndUpdateEma) {
  const std::vector<VideoSample> data = {RandomSample(4, 4, 1), RandomSample(4, 4, 9)};
  VideoTrainConfig tc;
  tc.batch_size = 2;
  tc.steps = 20;
  VideoModel a(TinyConfig()), b(TinyConfig());
  VideoTrainer ta(a, tc), tb(b, tc);
  ta.Train(data);
  tb.Train(data);
  EXPECT_EQ(ta.loss_history(), tb.loss_history());
  EXPECT_EQ(a.params().Values(), b.params().Values());
  EXPECT_EQ(ta.ema().updates(), 2);
  EXPECT_EQ(ta.step(), 20);
}

TEST(DdimSampleTest, SeedDeterministicWithEightFrames) {
  VideoModelConfig cfg = TinyConfig();
  VideoModel m(cfg);
  Rng init(5);
  for (size_t i = 0; i < m.params().size(); ++i) {
    for (auto& v : m.params().at(i).mutable_value().storage()) v += 0.05 * init.Normal();
  }
  const auto s = RandomSample(4, 4, 1);
  SamplerConfig sc;
  sc.steps = 10;
  const VideoClip a = DdimSample(m, s.observation, s.condition, sc, 123);
  const VideoClip b = DdimSample(m, s.observation, s.condition, sc, 123);
  const VideoClip c = DdimSample(m, s.observation, s.condition, sc, 124);
  ASSERT_EQ(a.frames.size(), 8u);
  EXPECT_EQ(a.frames[0], s.observation);
  for (int k = 0; k < 8; ++k) EXPECT_EQ(a.frames[k], b.frames[k]);
  EXPECT_NE(a.frames[3], c.frames[3]);
  for (const auto& f : a.frames) {
    for (double p : f.pixels) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(DdimSampleTest, ZeroGuidanceEqualsTheNullBranch) {
  VideoModel m(TinyConfig());
  Rng init(6);
  for (size_t i = 0; i < m.params().size(); ++i) {
    for (auto& v : m.params().at(i).mutable_value().storage()) v += 0.05 * init.Normal();
  }
  const auto s = RandomSample(4, 4, 2);
  SamplerConfig sc;
  sc.steps = 8;
  sc.guidance = 0.0;
  const VideoClip got = DdimSample(m, s.observation, s.condition, sc, 77);

  // Reference: the same chain driven by the null-conditioned prediction alone.
  const GlobalCondition gc = m.encoder().Build(s.condition);
  Rng rng(77);
  Tensor x({1, 21, 4, 4});
  for (auto& v : x.storage()) v = rng.Normal();
  const auto ts = DdimTimesteps(m.schedule().steps(), sc.steps);
  for (size_t k = 0; k < ts.size(); ++k) {
    const int t_prev = k + 1 < ts.size() ? ts[k + 1] : 0;
    const Tensor eps = m.Denoise(x, ts[k], s.observation, gc, /*use_null=*/true);
    x = DdimStep(x, ts[k], t_prev, eps, m.schedule(), true);
  }
  const auto want = TensorToFrames(x);
  for (int f = 0; f < kFutureFrames; ++f) {
    for (size_t i = 0; i < want[f].pixels.size(); ++i) {
      EXPECT_NEAR(got.frames[f + 1].pixels[i], want[f].pixels[i], 1e-6);
    }
  }
}

TEST(MaskInputTest, CoversAboutTheRequestedFraction) {
  const Frame f(32, 32, 0.7);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Frame m = MaskInput(f, 0.25, seed);
    int zero = 0;
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) zero += m.at(r, c, 0) == 0.0;
    }
    const double frac = zero / 1024.0;
    EXPECT_GE(frac, 0.20);
    EXPECT_LE(frac, 0.30);
  }
  EXPECT_EQ(MaskInput(f, 0.25, 4), MaskInput(f, 0.25, 4));
  EXPECT_NE(MaskInput(f, 0.25, 4), MaskInput(f, 0.25, 5));
  EXPECT_EQ(MaskInput(f, 0.0, 4), f);
  EXPECT_THROW(MaskInput(f, 1.0, 0), RangeError);
  EXPECT_THROW(MaskInput(f, -0.1, 0), RangeError);
}

}  // namespace
}  // namespace vidplan::videodiff
