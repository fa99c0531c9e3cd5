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

#include "vidplan/harness/config.h"

#include <cmath>
#include <set>

#include "json.hpp"
#include "vidplan/common/binary_io.h"
#include "vidplan/common/error.h"

namespace vidplan::harness {

namespace {

using nlohmann::json;

// Reads the members of one JSON object, remembering which keys were used
// so leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(Where() + "must be an object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    used_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      Read(*it, out);
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  Section Child(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    static const json kEmpty = json::object();
    return Section(it == j_.end() ? kEmpty : *it, path_ + "." + key);
  }

  // Unconverted member, or nullptr when absent.
  const json* Raw(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError("unknown key " + path_ + "." + key);
    }
  }

 private:
  std::string Where() const { return path_ + ": "; }

  static void Read(const json& v, bool& out) { out = v.get<bool>(); }
  static void Read(const json& v, std::vector<int>& out) { out = v.get<std::vector<int>>(); }
  static void Read(const json& v, double& out) {
    if (!v.is_number()) throw json::type_error::create(302, "number", &v);
    out = v.get<double>();
  }
  template <typename T>
    requires std::is_integral_v<T>
  static void Read(const json& v, T& out) {
    if (!v.is_number_integer()) throw json::type_error::create(302, "integer", &v);
    out = v.get<T>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void ReadTrain(Section s, TrainSection& t) {
  s.Get("steps", t.steps);
  s.Get("batch_size", t.batch_size);
  s.Get("lr", t.lr);
  s.Get("weight_decay", t.weight_decay);
  s.Get("warmup_steps", t.warmup_steps);
  s.Get("min_lr_ratio", t.min_lr_ratio);
  s.Get("max_grad_norm", t.max_grad_norm);
  s.Get("ema_decay", t.ema_decay);
  s.Get("ema_every", t.ema_every);
  s.Finish();
}

json WriteTrain(const TrainSection& t) {
  return {{"steps", t.steps},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"weight_decay", t.weight_decay},
          {"warmup_steps", t.warmup_steps},
          {"min_lr_ratio", t.min_lr_ratio},
          {"max_grad_norm", t.max_grad_norm},
          {"ema_decay", t.ema_decay},
          {"ema_every", t.ema_every}};
}

json WriteVideoModel(const videodiff::VideoModelConfig& m) {
  return {{"embed_dim", m.condition.embed_dim},
          {"max_subgoals", m.condition.max_subgoals},
          {"channels", m.channels},
          {"emb_dim", m.emb_dim},
          {"groups", m.groups},
          {"diffusion_steps", m.diffusion_steps},
          {"beta_1", m.beta_1},
          {"beta_T", m.beta_T},
          {"p_drop", m.p_drop}};
}

json WritePolicyModel(const policy::PolicyConfig& m) {
  return {{"horizon", m.horizon},
          {"include_object", m.include_object},
          {"obs_channels", m.obs_channels},
          {"obs_flat_dim", m.obs_flat_dim},
          {"obs_feat_dim", m.obs_feat_dim},
          {"coord_hidden", m.coord_hidden},
          {"coord_feat_dim", m.coord_feat_dim},
          {"coord_scale", m.coord_scale},
          {"channels", m.channels},
          {"emb_dim", m.emb_dim},
          {"groups", m.groups},
          {"diffusion_steps", m.diffusion_steps},
          {"beta_1", m.beta_1},
          {"beta_T", m.beta_T},
          {"p_drop", m.p_drop}};
}

json ToJson(const RunConfig& c) {
  json tasks = json::array();
  for (TaskId t : c.env.tasks) tasks.push_back(std::string(TaskName(t)));
  const auto& seg = c.data.segmentation;
  const auto& m = c.pipeline.match;
  return {
      {"seed", c.seed},
      {"env", {{"resolution", {c.env.height, c.env.width}}, {"tasks", tasks}}},
      {"data",
       {{"episodes_per_task", c.data.episodes_per_task},
        {"first_episode_seed", c.data.first_episode_seed},
        {"segmentation",
         {{"interval", seg.interval},
          {"distance_threshold", seg.distance_threshold},
          {"consecutive_frames", seg.consecutive_frames},
          {"recovery_needed_frames", seg.recovery_needed_frames},
          {"suppress_single_spike", seg.suppress_single_spike},
          {"max_allowed_anomaly", seg.max_allowed_anomaly}}}}},
      {"video",
       {{"model", WriteVideoModel(c.video.model)},
        {"train", WriteTrain(c.video.train)},
        {"sampler", {{"steps", c.video.sampler.steps}, {"guidance", c.video.sampler.guidance}}}}},
      {"policy",
       {{"model", WritePolicyModel(c.policy.model)},
        {"goal_window", c.policy.goal_window},
        {"train", WriteTrain(c.policy.train)},
        {"sampler",
         {{"steps", c.policy.sampler.steps}, {"guidance", c.policy.sampler.guidance}}}}},
      {"pipeline",
       {{"regen_max", c.pipeline.regen_max},
        {"stuck_window", c.pipeline.stuck_window},
        {"stuck_delta", c.pipeline.stuck_delta},
        {"mask_ratio", c.pipeline.mask_ratio},
        {"eval_episodes", c.pipeline.eval_episodes},
        {"eval_seed_offset", c.pipeline.eval_seed_offset},
        {"match",
         {{"w_geo", m.w_geo},
          {"w_pos", m.w_pos},
          {"w_ssim", m.w_ssim},
          {"w_flow", m.w_flow},
          {"tau", m.tau},
          {"t_max", m.t_max},
          {"ssim_window", m.ssim_window},
          {"block_grid", m.block_grid},
          {"edge_fraction", m.edge_fraction},
          {"flow_block", m.flow_block},
          {"flow_search", m.flow_search}}}}},
  };
}

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void ValidateTrain(const TrainSection& t, const std::string& name) {
  Require(t.steps > 0, name + ".steps must be positive");
  Require(t.batch_size > 0, name + ".batch_size must be positive");
  Require(std::isfinite(t.lr) && t.lr > 0, name + ".lr must be positive");
  Require(t.weight_decay >= 0, name + ".weight_decay must be non-negative");
  Require(t.warmup_steps >= 0, name + ".warmup_steps must be non-negative");
  Require(t.min_lr_ratio >= 0 && t.min_lr_ratio <= 1, name + ".min_lr_ratio must be in [0,1]");
  Require(std::isfinite(t.max_grad_norm), name + ".max_grad_norm must be finite");
  Require(t.ema_decay > 0 && t.ema_decay < 1, name + ".ema_decay must be in (0,1)");
  Require(t.ema_every > 0, name + ".ema_every must be positive");
}

nn::AdamWConfig Optimizer(const TrainSection& t) {
  nn::AdamWConfig o;
  o.lr = t.lr;
  o.weight_decay = t.weight_decay;
  o.warmup_steps = t.warmup_steps;
  o.total_steps = t.steps;
  o.min_lr_ratio = t.min_lr_ratio;
  o.max_grad_norm = t.max_grad_norm;
  return o;
}

template <typename Fn>
void Checked(const std::string& name, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const RangeError& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

}  // namespace

void RunConfig::Validate() const {
  Require(env.height >= 8 && env.width >= 8, "env.resolution must be at least 8x8");
  Require(!env.tasks.empty(), "env.tasks must not be empty");
  for (size_t i = 0; i < env.tasks.size(); ++i) {
    for (size_t k = 0; k < i; ++k) Require(env.tasks[i] != env.tasks[k], "env.tasks has duplicates");
  }
  Require(data.episodes_per_task > 0, "data.episodes_per_task must be positive");
  Require(data.first_episode_seed >= 0, "data.first_episode_seed must be non-negative");
  Checked("data.segmentation", [&] { data.segmentation.Validate(); });
  Checked("video.model", [&] { VideoModel().Validate(); });
  ValidateTrain(video.train, "video.train");
  Require(video.sampler.steps > 0, "video.sampler.steps must be positive");
  Require(video.sampler.steps <= video.model.diffusion_steps,
          "video.sampler.steps exceeds the diffusion steps");
  Require(std::isfinite(video.sampler.guidance), "video.sampler.guidance must be finite");
  Checked("policy.model", [&] { PolicyModel().Validate(); });
  Require(policy.goal_window > 0, "policy.goal_window must be positive");
  ValidateTrain(policy.train, "policy.train");
  Require(policy.sampler.steps > 0, "policy.sampler.steps must be positive");
  Require(policy.sampler.steps <= policy.model.diffusion_steps,
          "policy.sampler.steps exceeds the diffusion steps");
  Require(std::isfinite(policy.sampler.guidance), "policy.sampler.guidance must be finite");
  Checked("pipeline", [&] { Pipeline().Validate(); });
  Require(pipeline.eval_episodes > 0, "pipeline.eval_episodes must be positive");
  Require(pipeline.eval_seed_offset >= 0, "pipeline.eval_seed_offset must be non-negative");
}

videodiff::VideoModelConfig RunConfig::VideoModel() const {
  videodiff::VideoModelConfig m = video.model;
  m.height = env.height;
  m.width = env.width;
  m.init_seed = seed;
  return m;
}

videodiff::VideoTrainConfig RunConfig::VideoTrain() const {
  videodiff::VideoTrainConfig t;
  t.steps = video.train.steps;
  t.batch_size = video.train.batch_size;
  t.optimizer = Optimizer(video.train);
  t.ema.max_decay = video.train.ema_decay;
  t.ema.update_every = video.train.ema_every;
  t.seed = seed;
  return t;
}

policy::PolicyConfig RunConfig::PolicyModel() const {
  policy::PolicyConfig m = policy.model;
  m.height = env.height;
  m.width = env.width;
  m.init_seed = seed;
  return m;
}

policy::PolicyTrainConfig RunConfig::PolicyTrain() const {
  policy::PolicyTrainConfig t;
  t.steps = policy.train.steps;
  t.batch_size = policy.train.batch_size;
  t.optimizer = Optimizer(policy.train);
  t.ema.max_decay = policy.train.ema_decay;
  t.ema.update_every = policy.train.ema_every;
  t.seed = seed;
  return t;
}

datasetkit::PolicySetParams RunConfig::PolicySet() const {
  return {policy.goal_window, policy.model.horizon, seed};
}

pipeline::PipelineConfig RunConfig::Pipeline() const {
  pipeline::PipelineConfig p;
  p.regen_max = pipeline.regen_max;
  p.stuck_window = pipeline.stuck_window;
  p.stuck_delta = pipeline.stuck_delta;
  p.video_sampler = video.sampler;
  p.policy_sampler = policy.sampler;
  p.match = pipeline.match;
  p.mask_ratio = pipeline.mask_ratio;
  p.seed = seed;
  return p;
}

RunConfig SmokeConfig() {
  RunConfig c;
  c.video.model.channels = {16, 32, 64};
  c.policy.model.include_object = true;
  return c;
}

RunConfig ParseRunConfig(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section root(j, "config");
  root.Get("seed", c.seed);
  {
    Section s = root.Child("env");
    if (const json* res = s.Raw("resolution")) {
      Require(res->is_array() && res->size() == 2 && (*res)[0].is_number_integer() &&
                  (*res)[1].is_number_integer(),
              "env.resolution must be [height, width]");
      c.env.height = (*res)[0].get<int>();
      c.env.width = (*res)[1].get<int>();
    }
    if (const json* tasks = s.Raw("tasks")) {
      Require(tasks->is_array(), "env.tasks must be an array of task names");
      c.env.tasks.clear();
      for (const json& name : *tasks) {
        Require(name.is_string(), "env.tasks must be an array of task names");
        c.env.tasks.push_back(ParseTaskId(name.get<std::string>()));
      }
    }
    s.Finish();
  }
  {
    Section s = root.Child("data");
    s.Get("episodes_per_task", c.data.episodes_per_task);
    s.Get("first_episode_seed", c.data.first_episode_seed);
    Section g = s.Child("segmentation");
    auto& seg = c.data.segmentation;
    g.Get("interval", seg.interval);
    g.Get("distance_threshold", seg.distance_threshold);
    g.Get("consecutive_frames", seg.consecutive_frames);
    g.Get("recovery_needed_frames", seg.recovery_needed_frames);
    g.Get("suppress_single_spike", seg.suppress_single_spike);
    g.Get("max_allowed_anomaly", seg.max_allowed_anomaly);
    g.Finish();
    s.Finish();
  }
  {
    Section s = root.Child("video");
    Section m = s.Child("model");
    auto& vm = c.video.model;
    m.Get("embed_dim", vm.condition.embed_dim);
    m.Get("max_subgoals", vm.condition.max_subgoals);
    m.Get("channels", vm.channels);
    m.Get("emb_dim", vm.emb_dim);
    m.Get("groups", vm.groups);
    m.Get("diffusion_steps", vm.diffusion_steps);
    m.Get("beta_1", vm.beta_1);
    m.Get("beta_T", vm.beta_T);
    m.Get("p_drop", vm.p_drop);
    m.Finish();
    ReadTrain(s.Child("train"), c.video.train);
    Section sm = s.Child("sampler");
    sm.Get("steps", c.video.sampler.steps);
    sm.Get("guidance", c.video.sampler.guidance);
    sm.Finish();
    s.Finish();
  }
  {
    Section s = root.Child("policy");
    Section m = s.Child("model");
    auto& pm = c.policy.model;
    m.Get("horizon", pm.horizon);
    m.Get("include_object", pm.include_object);
    m.Get("obs_channels", pm.obs_channels);
    m.Get("obs_flat_dim", pm.obs_flat_dim);
    m.Get("obs_feat_dim", pm.obs_feat_dim);
    m.Get("coord_hidden", pm.coord_hidden);
    m.Get("coord_feat_dim", pm.coord_feat_dim);
    m.Get("coord_scale", pm.coord_scale);
    m.Get("channels", pm.channels);
    m.Get("emb_dim", pm.emb_dim);
    m.Get("groups", pm.groups);
    m.Get("diffusion_steps", pm.diffusion_steps);
    m.Get("beta_1", pm.beta_1);
    m.Get("beta_T", pm.beta_T);
    m.Get("p_drop", pm.p_drop);
    m.Finish();
    s.Get("goal_window", c.policy.goal_window);
    ReadTrain(s.Child("train"), c.policy.train);
    Section sm = s.Child("sampler");
    sm.Get("steps", c.policy.sampler.steps);
    sm.Get("guidance", c.policy.sampler.guidance);
    sm.Finish();
    s.Finish();
  }
  {
    Section s = root.Child("pipeline");
    auto& p = c.pipeline;
    s.Get("regen_max", p.regen_max);
    s.Get("stuck_window", p.stuck_window);
    s.Get("stuck_delta", p.stuck_delta);
    s.Get("mask_ratio", p.mask_ratio);
    s.Get("eval_episodes", p.eval_episodes);
    s.Get("eval_seed_offset", p.eval_seed_offset);
    Section m = s.Child("match");
    m.Get("w_geo", p.match.w_geo);
    m.Get("w_pos", p.match.w_pos);
    m.Get("w_ssim", p.match.w_ssim);
    m.Get("w_flow", p.match.w_flow);
    m.Get("tau", p.match.tau);
    m.Get("t_max", p.match.t_max);
    m.Get("ssim_window", p.match.ssim_window);
    m.Get("block_grid", p.match.block_grid);
    m.Get("edge_fraction", p.match.edge_fraction);
    m.Get("flow_block", p.match.flow_block);
    m.Get("flow_search", p.match.flow_search);
    m.Finish();
    s.Finish();
  }
  root.Finish();
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) { return ParseRunConfig(ReadFileBytes(path)); }

std::string SerializeRunConfig(const RunConfig& config) { return ToJson(config).dump(2) + "\n"; }

uint64_t ConfigHash(const RunConfig& config) { return Fnv1a64(SerializeRunConfig(config)); }

std::string RunDirectoryName(const RunConfig& config) {
  return "run-" + HexDigest(ConfigHash(config));
}

std::string VideoModelSignature(const RunConfig& config) {
  json j = WriteVideoModel(config.video.model);
  j["resolution"] = {config.env.height, config.env.width};
  return j.dump();
}

std::string PolicyModelSignature(const RunConfig& config) {
  json j = WritePolicyModel(config.policy.model);
  j["resolution"] = {config.env.height, config.env.width};
  return j.dump();
}

}  // namespace vidplan::harness
