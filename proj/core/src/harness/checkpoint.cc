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

#include "vidplan/harness/checkpoint.h"

#include "vidplan/common/binary_io.h"
#include "vidplan/common/error.h"
#include "vidplan/nn/optim.h"

namespace vidplan::harness {

namespace {

constexpr char kMagic[4] = {'V', 'P', 'C', 'K'};

template <typename Trainer>
Checkpoint Capture(CheckpointKind kind, const nn::ParameterSet& params, Trainer& trainer,
                   uint64_t hash, std::string signature) {
  Checkpoint c;
  c.kind = kind;
  c.config_hash = hash;
  c.model_signature = std::move(signature);
  c.params = params.Values();
  BinaryWriter ema;
  trainer.ema().Serialize(ema);
  c.ema_state = ema.Release();
  BinaryWriter opt;
  trainer.optimizer().Serialize(opt);
  c.optimizer_state = opt.Release();
  c.step = trainer.step();
  c.loss_history = trainer.loss_history();
  return c;
}

void RequireKind(const Checkpoint& c, CheckpointKind kind) {
  if (c.kind != kind) {
    throw ConfigError(kind == CheckpointKind::kVideo ? "not a video-model checkpoint"
                                                     : "not a policy checkpoint");
  }
}

template <typename Model, typename Trainer>
void Restore(const Checkpoint& c, Model& model, Trainer& trainer) {
  try {
    model.params().LoadValues(c.params);
    BinaryReader ema(c.ema_state);
    trainer.ema().Deserialize(ema);
    BinaryReader opt(c.optimizer_state);
    trainer.optimizer().Deserialize(opt);
    if (!ema.AtEnd() || !opt.AtEnd()) throw FormatError("trailing optimizer state");
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("checkpoint does not fit the model: ") + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(std::string("checkpoint does not fit the model: ") + e.what());
  }
  trainer.Restore(c.step, c.loss_history);
}

template <typename Model, typename Config>
std::unique_ptr<Model> FromCheckpoint(const Checkpoint& c, const Config& cfg) {
  Model fresh(cfg);
  nn::Ema ema(fresh.params(), {});
  try {
    BinaryReader in(c.ema_state);
    ema.Deserialize(in);
    return fresh.CloneWithValues(ema.shadow());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("checkpoint does not fit the model: ") + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(std::string("checkpoint does not fit the model: ") + e.what());
  }
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& c) {
  BinaryWriter out;
  out.PutBytes(std::string_view(kMagic, 4));
  out.Put<uint32_t>(kCheckpointVersion);
  out.Put<uint32_t>(static_cast<uint32_t>(c.kind));
  out.Put<uint64_t>(c.config_hash);
  out.PutString(c.model_signature);
  nn::WriteTensors(out, c.params);
  out.PutString(c.ema_state);
  out.PutString(c.optimizer_state);
  out.Put<int64_t>(c.step);
  out.PutDoubles(c.loss_history);
  out.Put<uint32_t>(Crc32(out.bytes()));
  return out.Release();
}

Checkpoint ParseCheckpoint(std::string_view bytes) {
  BinaryReader in(bytes);
  if (in.GetBytes(4) != std::string_view(kMagic, 4)) throw FormatError("not a checkpoint");
  const auto version = in.Get<uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " (this build reads " + std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < 4 + 4 + 4 ||
      Crc32(bytes.substr(0, bytes.size() - 4)) !=
          BinaryReader(bytes.substr(bytes.size() - 4)).Get<uint32_t>()) {
    throw FormatError("checkpoint checksum mismatch");
  }
  Checkpoint c;
  const auto kind = in.Get<uint32_t>();
  if (kind != 1 && kind != 2) throw FormatError("unknown checkpoint kind");
  c.kind = static_cast<CheckpointKind>(kind);
  c.config_hash = in.Get<uint64_t>();
  c.model_signature = in.GetString();
  c.params = nn::ReadTensors(in);
  c.ema_state = in.GetString();
  c.optimizer_state = in.GetString();
  c.step = in.Get<int64_t>();
  c.loss_history = in.GetDoubles();
  in.Get<uint32_t>();  // checksum, verified above
  if (!in.AtEnd()) throw FormatError("trailing bytes after checkpoint");
  return c;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  WriteFileBytes(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::string& path) { return ParseCheckpoint(ReadFileBytes(path)); }

Checkpoint CaptureVideo(const videodiff::VideoModel& model, videodiff::VideoTrainer& trainer,
                        uint64_t config_hash, std::string signature) {
  return Capture(CheckpointKind::kVideo, model.params(), trainer, config_hash,
                 std::move(signature));
}

Checkpoint CapturePolicy(const policy::PolicyModel& model, policy::PolicyTrainer& trainer,
                         uint64_t config_hash, std::string signature) {
  return Capture(CheckpointKind::kPolicy, model.params(), trainer, config_hash,
                 std::move(signature));
}

void RestoreVideo(const Checkpoint& ckpt, videodiff::VideoModel& model,
                  videodiff::VideoTrainer& trainer) {
  RequireKind(ckpt, CheckpointKind::kVideo);
  Restore(ckpt, model, trainer);
}

void RestorePolicy(const Checkpoint& ckpt, policy::PolicyModel& model,
                   policy::PolicyTrainer& trainer) {
  RequireKind(ckpt, CheckpointKind::kPolicy);
  Restore(ckpt, model, trainer);
}

std::unique_ptr<videodiff::VideoModel> VideoFromCheckpoint(const Checkpoint& ckpt,
                                                           const videodiff::VideoModelConfig& cfg) {
  RequireKind(ckpt, CheckpointKind::kVideo);
  return FromCheckpoint<videodiff::VideoModel>(ckpt, cfg);
}

std::unique_ptr<policy::PolicyModel> PolicyFromCheckpoint(const Checkpoint& ckpt,
                                                          const policy::PolicyConfig& cfg) {
  RequireKind(ckpt, CheckpointKind::kPolicy);
  return FromCheckpoint<policy::PolicyModel>(ckpt, cfg);
}

}  // namespace vidplan::harness
