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

// Versioned training checkpoints: everything needed to resume a run or to
// sample from its EMA weights.

#ifndef VIDPLAN_HARNESS_CHECKPOINT_H_
#define VIDPLAN_HARNESS_CHECKPOINT_H_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vidplan/actionpolicy/policy.h"
#include "vidplan/nn/tensor.h"
#include "vidplan/videodiff/video_model.h"

namespace vidplan::harness {

inline constexpr uint32_t kCheckpointVersion = 1;

enum class CheckpointKind : uint32_t { kVideo = 1, kPolicy = 2 };

struct Checkpoint {
  CheckpointKind kind = CheckpointKind::kVideo;
  uint64_t config_hash = 0;     // of the full run config
  std::string model_signature;  // canonical model section
  std::vector<nn::Tensor> params;
  std::string ema_state;        // nn::Ema::Serialize bytes
  std::string optimizer_state;  // nn::AdamW::Serialize bytes
  int64_t step = 0;
  std::vector<double> loss_history;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Layout: magic "VPCK", version, kind, config hash, signature, params,
// EMA state, optimizer state, step, loss history, then a CRC32 of all
// preceding bytes.
std::string SerializeCheckpoint(const Checkpoint& ckpt);
// FormatError on bad magic, a version other than kCheckpointVersion,
// truncation, trailing bytes, or a checksum mismatch.
Checkpoint ParseCheckpoint(std::string_view bytes);

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);  // IoError, FormatError

Checkpoint CaptureVideo(const videodiff::VideoModel& model, videodiff::VideoTrainer& trainer,
                        uint64_t config_hash, std::string signature);
Checkpoint CapturePolicy(const policy::PolicyModel& model, policy::PolicyTrainer& trainer,
                         uint64_t config_hash, std::string signature);

// Loads parameters, EMA, optimizer, step, and history into a freshly built
// model/trainer pair. Throws ConfigError when the kind is wrong or the
// parameter layout does not match the model.
void RestoreVideo(const Checkpoint& ckpt, videodiff::VideoModel& model,
                  videodiff::VideoTrainer& trainer);
void RestorePolicy(const Checkpoint& ckpt, policy::PolicyModel& model,
                   policy::PolicyTrainer& trainer);

// The EMA shadow of the checkpoint as a new model built from `cfg`.
std::unique_ptr<videodiff::VideoModel> VideoFromCheckpoint(const Checkpoint& ckpt,
                                                           const videodiff::VideoModelConfig& cfg);
std::unique_ptr<policy::PolicyModel> PolicyFromCheckpoint(const Checkpoint& ckpt,
                                                          const policy::PolicyConfig& cfg);

}  // namespace vidplan::harness

#endif  // VIDPLAN_HARNESS_CHECKPOINT_H_
