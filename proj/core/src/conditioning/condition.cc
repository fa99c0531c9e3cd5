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

#include "vidplan/conditioning/condition.h"

#include <cmath>

#include "vidplan/common/error.h"

namespace vidplan::conditioning {

using nn::Var;

void ConditionConfig::Validate() const {
  if (embed_dim < 4) throw ConfigError("embed_dim must be >= 4");
  if (max_subgoals < 1) throw ConfigError("max_subgoals must be >= 1");
}

int DiscretizeDirection(const Direction& v) {
  for (int c : v) {
    if (c < -1 || c > 1) {
      throw RangeError("direction component " + std::to_string(c) +
                       " outside {-1, 0, 1}");
    }
  }
  return (v[0] + 1) * 9 + (v[1] + 1) * 3 + (v[2] + 1);
}

Direction DirectionFromIndex(int index) {
  if (index < 0 || index >= kDirectionBins) throw RangeError("direction bin");
  return {index / 9 - 1, index / 3 % 3 - 1, index % 3 - 1};
}

int GlobalCondition::real_subgoals() const {
  int n = 0;
  for (size_t k = 1; k < mask.size(); ++k) n += mask[k];
  return n;
}

Var GlobalCondition::Flatten() const {
  return nn::Reshape(tokens, {1, static_cast<int>(tokens.size())});
}

ConditionEncoder::ConditionEncoder(nn::ParameterSet& params,
                                   const std::string& prefix,
                                   ConditionConfig cfg, Rng& rng)
    : cfg_(cfg) {
  cfg_.Validate();
  const int d = cfg_.embed_dim;
  // Embedding tables start at unit scale; the MLPs use fan-in init.
  action_table_ = params.Add(prefix + "action_table",
                             nn::NormalInit({kNumActionTypes, d}, 1.0, rng));
  direction_table_ = params.Add(prefix + "direction_table",
                                nn::NormalInit({kDirectionBins, d}, 1.0, rng));
  dist1_ = nn::LinearLayer(params, prefix + "distance.0", 1, d, rng);
  dist2_ = nn::LinearLayer(params, prefix + "distance.1", d, d, rng);
  sub1_ = nn::LinearLayer(params, prefix + "subgoal.0", 3 * d, d, rng);
  sub2_ = nn::LinearLayer(params, prefix + "subgoal.1", d, d, rng);
  task_table_ =
      params.Add(prefix + "task_table", nn::NormalInit({kNumTasks, d}, 1.0, rng));
  pad_ = params.Add(prefix + "pad", nn::NormalInit({d}, 1.0, rng));
}

Var ConditionEncoder::EmbedActionType(ActionType type) const {
  return nn::Gather(action_table_, {static_cast<int>(type)});
}

Var ConditionEncoder::EmbedActionType(std::string_view symbol) const {
  return EmbedActionType(ParseActionType(symbol));
}

Var ConditionEncoder::EmbedDirection(const Direction& v) const {
  return nn::Gather(direction_table_, {DiscretizeDirection(v)});
}

Var ConditionEncoder::EmbedDistance(double s) const {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw RangeError("distance must be finite and non-negative");
  }
  return dist2_(nn::SiLU(dist1_(Var::Leaf(nn::Tensor({1, 1}, s)))));
}

Var ConditionEncoder::EmbedSubgoal(const Subgoal& g) const {
  return EmbedSubgoals({g});
}

Var ConditionEncoder::EmbedSubgoals(const std::vector<Subgoal>& subgoals) const {
  const int r = static_cast<int>(subgoals.size());
  if (r == 0) throw ShapeError("EmbedSubgoals of an empty list");
  std::vector<int> types(r), bins(r);
  nn::Tensor dist({r, 1});
  for (int i = 0; i < r; ++i) {
    const Subgoal& g = subgoals[i];
    types[i] = static_cast<int>(g.action);
    bins[i] = DiscretizeDirection(g.direction);
    if (!(g.distance >= 0.0) || !std::isfinite(g.distance)) {
      throw RangeError("distance must be finite and non-negative");
    }
    dist[i] = g.distance;
  }
  Var e_act = nn::Gather(action_table_, types);
  Var e_dir = nn::Gather(direction_table_, bins);
  Var e_dis = dist2_(nn::SiLU(dist1_(Var::Leaf(std::move(dist)))));
  return sub2_(nn::SiLU(sub1_(nn::Concat({e_act, e_dir, e_dis}))));
}

Var ConditionEncoder::EmbedTask(TaskId task) const {
  return nn::Gather(task_table_, {static_cast<int>(task)});
}

Var ConditionEncoder::EmbedTask(std::string_view task_name) const {
  try {
    return EmbedTask(ParseTaskId(task_name));
  } catch (const ConfigError&) {
    throw VocabularyError("unknown task '" + std::string(task_name) + "'");
  }
}

GlobalCondition ConditionEncoder::Build(const ConditionInput& input) const {
  const auto& goals = input.plan.subgoals;
  if (goals.size() > static_cast<size_t>(cfg_.max_subgoals)) {
    throw CapacityError("plan has " + std::to_string(goals.size()) +
                        " subgoals; capacity is " +
                        std::to_string(cfg_.max_subgoals));
  }
  std::vector<Var> embeds;
  if (!goals.empty()) {
    Var rows = EmbedSubgoals(goals);
    for (int i = 0; i < static_cast<int>(goals.size()); ++i) {
      embeds.push_back(nn::AssembleSlots(rows, pad_, {i}, 1, 1));
    }
  }
  return BuildGlobalCondition(EmbedTask(input.task), embeds, pad_,
                              cfg_.max_subgoals);
}

Var ConditionEncoder::EncodeBatch(const std::vector<ConditionInput>& inputs) const {
  const int b = static_cast<int>(inputs.size());
  const int n_max = cfg_.max_subgoals;
  std::vector<int> tasks(b);
  std::vector<Subgoal> all;
  std::vector<int> sources(static_cast<size_t>(b) * n_max, -1);
  for (int i = 0; i < b; ++i) {
    tasks[i] = static_cast<int>(inputs[i].task);
    const auto& goals = inputs[i].plan.subgoals;
    if (goals.size() > static_cast<size_t>(n_max)) {
      throw CapacityError("plan exceeds condition capacity");
    }
    for (size_t k = 0; k < goals.size(); ++k) {
      sources[static_cast<size_t>(i) * n_max + k] = static_cast<int>(all.size());
      all.push_back(goals[k]);
    }
  }
  Var rows = all.empty() ? nn::Reshape(pad_, {1, cfg_.embed_dim})
                         : EmbedSubgoals(all);
  Var subgoal_slots = nn::AssembleSlots(rows, pad_, sources, b, n_max);
  return nn::Concat({nn::Gather(task_table_, tasks), subgoal_slots});
}

GlobalCondition BuildGlobalCondition(const Var& z_task,
                                     const std::vector<Var>& subgoal_embeds,
                                     const Var& pad, int max_subgoals) {
  const int d = static_cast<int>(pad.size());
  const int n = static_cast<int>(subgoal_embeds.size());
  if (n > max_subgoals) {
    throw CapacityError(std::to_string(n) + " subgoal embeddings exceed N_max=" +
                        std::to_string(max_subgoals));
  }
  std::vector<Var> parts{nn::Reshape(z_task, {1, d})};
  if (z_task.size() != static_cast<size_t>(d)) throw ShapeError("z_task size != d");
  for (const Var& e : subgoal_embeds) {
    if (e.size() != static_cast<size_t>(d)) throw ShapeError("subgoal embed size != d");
    parts.push_back(nn::Reshape(e, {1, d}));
  }
  Var rows = nn::Reshape(nn::Concat(parts), {n + 1, d});
  std::vector<int> sources(1 + max_subgoals, -1);
  for (int k = 0; k <= n; ++k) sources[k] = k;
  GlobalCondition cond;
  cond.tokens = nn::Reshape(nn::AssembleSlots(rows, pad, sources, 1, 1 + max_subgoals),
                            {1 + max_subgoals, d});
  cond.mask.assign(1 + max_subgoals, false);
  for (int k = 0; k <= n; ++k) cond.mask[k] = true;
  return cond;
}

GlobalCondition ApplyMask(const GlobalCondition& cond, const Var& pad) {
  std::vector<bool> replace(cond.mask.size());
  for (size_t k = 0; k < replace.size(); ++k) replace[k] = !cond.mask[k];
  return {nn::ReplaceRows(cond.tokens, pad, replace), cond.mask};
}

}  // namespace vidplan::conditioning
