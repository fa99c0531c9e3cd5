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

// Subgoal and task embeddings and the composite global condition
//
//   e_i = MLP([E_act(type); E_dir(bin(direction)); MLP_dis(distance)])
//   T   = [z_task; e_1; ...; e_n; pad; ...; pad]     (1 + N_max tokens)
//
// T is flattened to (1 + N_max) * d before it reaches the denoiser.

#ifndef VIDPLAN_CONDITIONING_CONDITION_H_
#define VIDPLAN_CONDITIONING_CONDITION_H_

#include <string>
#include <vector>

#include "vidplan/common/rng.h"
#include "vidplan/nn/layers.h"
#include "vidplan/spatialplan/plan.h"

namespace vidplan::conditioning {

inline constexpr int kDirectionBins = 27;

struct ConditionConfig {
  int embed_dim = 16;
  int max_subgoals = kMaxSubgoals;

  void Validate() const;  // ConfigError
  int tokens() const { return 1 + max_subgoals; }
  int flat_size() const { return tokens() * embed_dim; }
};

// (v_x+1)*9 + (v_y+1)*3 + (v_z+1). Throws RangeError off {-1,0,1}.
int DiscretizeDirection(const Direction& v);
Direction DirectionFromIndex(int index);

// What a condition is built from; the video model never sees raw text.
struct ConditionInput {
  TaskId task = TaskId::kReach;
  PlanTable plan;
};

// tokens: [1 + N_max, d]; mask[k] marks real tokens (token 0 always real).
struct GlobalCondition {
  nn::Var tokens;
  std::vector<bool> mask;

  int real_subgoals() const;
  // [1, (1 + N_max) * d]
  nn::Var Flatten() const;
};

class ConditionEncoder {
 public:
  ConditionEncoder() = default;
  ConditionEncoder(nn::ParameterSet& params, const std::string& prefix,
                   ConditionConfig cfg, Rng& rng);

  const ConditionConfig& config() const { return cfg_; }

  // Each returns a [1, d] row.
  nn::Var EmbedActionType(ActionType type) const;
  nn::Var EmbedActionType(std::string_view symbol) const;  // VocabularyError
  nn::Var EmbedDirection(const Direction& v) const;
  nn::Var EmbedDistance(double s) const;  // RangeError for s < 0
  nn::Var EmbedSubgoal(const Subgoal& g) const;
  nn::Var EmbedTask(TaskId task) const;
  nn::Var EmbedTask(std::string_view task_name) const;  // VocabularyError

  // Batched subgoal embeddings, [subgoals.size(), d].
  nn::Var EmbedSubgoals(const std::vector<Subgoal>& subgoals) const;

  // Learned filler for unused subgoal slots, [d].
  const nn::Var& pad() const { return pad_; }

  // Single-instance condition (z_task plus padded subgoal embeddings).
  GlobalCondition Build(const ConditionInput& input) const;

  // Flattened conditions for a batch, [B, (1 + N_max) * d]. Equivalent to
  // stacking Build(inputs[b]).Flatten() but with one pass per table.
  nn::Var EncodeBatch(const std::vector<ConditionInput>& inputs) const;

 private:
  ConditionConfig cfg_;
  nn::Var action_table_;     // [7, d]
  nn::Var direction_table_;  // [27, d]
  nn::LinearLayer dist1_, dist2_;
  nn::LinearLayer sub1_, sub2_;
  nn::Var task_table_;  // [3, d]
  nn::Var pad_;
};

// Composite condition from already-embedded pieces. z_task is [1, d] (or
// [d]); each subgoal embedding is [1, d]. Throws CapacityError when more
// than max_subgoals embeddings are given.
GlobalCondition BuildGlobalCondition(const nn::Var& z_task,
                                     const std::vector<nn::Var>& subgoal_embeds,
                                     const nn::Var& pad, int max_subgoals);

// Overwrites every masked-out token with `pad`, so whatever a padded slot
// held cannot leak into a consumer.
GlobalCondition ApplyMask(const GlobalCondition& cond, const nn::Var& pad);

}  // namespace vidplan::conditioning

#endif  // VIDPLAN_CONDITIONING_CONDITION_H_
