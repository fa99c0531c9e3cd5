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

#include "vidplan/datasetkit/dataset.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "vidplan/common/binary_io.h"
#include "vidplan/common/error.h"

namespace vidplan::datasetkit {

void TrajectoryRecord::Validate() const {
  const size_t n = frames.size();
  if (ee.size() != n || obj.size() != n || distance.size() != n || actions.size() != n) {
    throw ShapeError("trajectory arrays disagree in length");
  }
  for (size_t i = 1; i < n; ++i) RequireSameShape(frames[0], frames[i]);
}

bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.task != b.task || a.seed != b.seed || a.success != b.success ||
      a.frames != b.frames || a.ee != b.ee || a.obj != b.obj ||
      a.distance != b.distance || a.actions.size() != b.actions.size()) {
    return false;
  }
  for (size_t i = 0; i < a.actions.size(); ++i) {
    if (a.actions[i].delta != b.actions[i].delta ||
        a.actions[i].gripper != b.actions[i].gripper) {
      return false;
    }
  }
  return true;
}

TrajectoryRecord RecordTrajectory(const TaskSpec& task, int64_t seed) {
  const std::vector<envsim::EnvState> states = envsim::RolloutExpert(task, seed);
  TrajectoryRecord rec;
  rec.task = task.task_id;
  rec.seed = seed;
  rec.success = envsim::CheckSuccess(states.back());
  for (const auto& s : states) {
    rec.frames.push_back(envsim::Render(s));
    rec.ee.push_back(s.ee_pos);
    rec.obj.push_back(s.obj_pos);
    rec.distance.push_back((s.obj_pos - s.ee_pos).norm());
    rec.actions.push_back(envsim::ClipAction(envsim::ExpertAction(s)));
  }
  return rec;
}

void SegmentationParams::Validate() const {
  if (interval < 1) throw ConfigError("segmentation interval must be >= 1");
  if (!(distance_threshold > 0.0)) throw ConfigError("distance threshold must be positive");
  if (consecutive_frames < 1) throw ConfigError("consecutive_frames must be >= 1");
  if (recovery_needed_frames < 0 || max_allowed_anomaly < 0) {
    throw ConfigError("recovery / anomaly counts must be non-negative");
  }
}

std::vector<Interval> DetectFineIntervals(const std::vector<double>& distances,
                                          const SegmentationParams& p) {
  p.Validate();
  std::vector<Interval> out;
  bool fine = false, exited = false;
  int run = 0, run_start = 0, recovery = 0;
  int start = 0, last_below = 0, streak = 0;
  const int n = static_cast<int>(distances.size());
  for (int i = 0; i < n; ++i) {
    const bool below = distances[i] <= p.distance_threshold;
    if (!fine) {
      if (!below) {
        run = 0;
        ++recovery;
        continue;
      }
      if (run++ == 0) run_start = i;
      if (run >= p.consecutive_frames &&
          (!exited || recovery >= p.recovery_needed_frames)) {
        fine = true;
        start = run_start;
        last_below = i;
        streak = 0;
      }
    } else if (below) {
      last_below = i;
      streak = 0;
    } else {
      ++streak;
      const int counted = streak - (p.suppress_single_spike ? 1 : 0);
      if (counted > p.max_allowed_anomaly) {
        out.push_back({start, last_below});
        fine = false;
        exited = true;
        run = 0;
        recovery = 0;
      }
    }
  }
  if (fine) out.push_back({start, last_below});
  return out;
}

std::vector<int> ResampleIndices(int length, const std::vector<Interval>& fine,
                                 const SegmentationParams& p) {
  p.Validate();
  if (length <= 0) return {};
  const int fine_stride =
      std::max(1, static_cast<int>(std::lround(p.interval / 5.0)));
  std::vector<bool> inside(length, false);
  for (const auto& iv : fine) {
    if (iv[0] < 0 || iv[1] >= length || iv[0] > iv[1]) {
      throw RangeError("fine interval outside the trajectory");
    }
    for (int i = iv[0]; i <= iv[1]; ++i) inside[i] = true;
  }
  std::vector<int> idx;
  for (int i = 0; i < length; ++i) {
    const int stride = inside[i] ? fine_stride : p.interval;
    if (i % stride == 0 || i == 0 || i == length - 1) idx.push_back(i);
  }
  return idx;
}

TrajectoryRecord SelectFrames(const TrajectoryRecord& rec, const std::vector<int>& indices) {
  TrajectoryRecord out;
  out.task = rec.task;
  out.seed = rec.seed;
  out.success = rec.success;
  for (int i : indices) {
    if (i < 0 || i >= rec.length()) throw RangeError("frame index out of range");
    out.frames.push_back(rec.frames[i]);
    out.ee.push_back(rec.ee[i]);
    out.obj.push_back(rec.obj[i]);
    out.distance.push_back(rec.distance[i]);
    out.actions.push_back(rec.actions[i]);
  }
  return out;
}

TrajectoryRecord ResampleTrajectory(const TrajectoryRecord& rec,
                                    const SegmentationParams& p) {
  rec.Validate();
  return SelectFrames(rec, ResampleIndices(rec.length(), DetectFineIntervals(rec.distance, p), p));
}

PlanOracle RulePlanOracle() {
  return [](const SpatialState& s, TaskId task) { return GeneratePlan(s.delta_p, task); };
}

std::vector<videodiff::VideoSample> BuildVideoTrainingSet(
    const std::vector<TrajectoryRecord>& records, const PlanOracle& oracle) {
  using videodiff::kClipFrames;
  std::vector<videodiff::VideoSample> out;
  for (const auto& rec : records) {
    rec.Validate();
    const int len = rec.length();
    if (len < 2) {
      std::cerr << "warning: skipping " << TaskName(rec.task) << " seed " << rec.seed
                << " with " << len << " frame(s)\n";
      continue;
    }
    const int windows = std::max(1, len - kClipFrames + 1);
    for (int w = 0; w < windows; ++w) {
      videodiff::VideoSample s;
      s.observation = rec.frames[w];
      for (int k = 1; k < kClipFrames; ++k) {
        s.future.push_back(rec.frames[std::min(w + k, len - 1)]);
      }
      s.condition.task = rec.task;
      s.condition.plan = oracle(MakeSpatialState(rec.ee[w], rec.obj[w]), rec.task);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<policy::PolicySample> BuildPolicyTrainingSet(
    const std::vector<TrajectoryRecord>& records, const PolicySetParams& p) {
  if (p.goal_window < 1 || p.horizon < 1) throw ConfigError("invalid policy set parameters");
  Rng rng(p.seed);
  std::vector<policy::PolicySample> out;
  for (const auto& rec : records) {
    rec.Validate();
    const int len = rec.length();
    for (int i = 0; i + 1 < len; ++i) {
      const int g = policy::SampleGoalIndex(i, len - 1, p.goal_window, rng);
      policy::PolicySample s;
      s.input.current = rec.frames[i];
      s.input.goal = rec.frames[g];
      s.input.p_ee = rec.ee[i];
      s.input.p_obj = rec.obj[i];
      for (int k = 0; k < p.horizon; ++k) {
        if (i + k < len) {
          s.actions.push_back(policy::NormalizeAction(rec.actions[i + k]));
        } else {
          s.actions.push_back({0.0, 0.0, 0.0, s.actions.back()[3]});
        }
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

constexpr char kMagic[] = "VPTRAJ01";
constexpr size_t kMagicSize = 8;

bool OnByteGrid(const std::vector<Frame>& frames) {
  for (const auto& f : frames) {
    for (double v : f.pixels) {
      if (!(v >= 0.0 && v <= 1.0) || std::round(v * 255.0) / 255.0 != v) return false;
    }
  }
  return true;
}

void PutVec3s(BinaryWriter& w, const std::vector<Vec3>& v) {
  for (const auto& p : v) {
    w.Put(p.x());
    w.Put(p.y());
    w.Put(p.z());
  }
}

std::vector<Vec3> GetVec3s(BinaryReader& r, int n) {
  std::vector<Vec3> v(n);
  for (auto& p : v) {
    const double x = r.Get<double>(), y = r.Get<double>(), z = r.Get<double>();
    p = Vec3(x, y, z);
  }
  return v;
}

}  // namespace

std::string SerializeArchive(const std::vector<TrajectoryRecord>& records) {
  BinaryWriter w;
  w.PutBytes(std::string_view(kMagic, kMagicSize));
  w.Put<uint32_t>(kArchiveVersion);
  w.Put<uint32_t>(static_cast<uint32_t>(records.size()));
  for (const auto& rec : records) {
    rec.Validate();
    const int h = rec.frames.empty() ? 0 : rec.frames[0].height;
    const int wd = rec.frames.empty() ? 0 : rec.frames[0].width;
    const bool bytes = OnByteGrid(rec.frames);
    w.Put<uint8_t>(static_cast<uint8_t>(rec.task));
    w.Put<int64_t>(rec.seed);
    w.Put<uint8_t>(rec.success ? 1 : 0);
    w.Put<uint32_t>(static_cast<uint32_t>(rec.length()));
    w.Put<uint32_t>(static_cast<uint32_t>(h));
    w.Put<uint32_t>(static_cast<uint32_t>(wd));
    w.Put<uint8_t>(bytes ? 1 : 0);
    for (const auto& f : rec.frames) {
      if (bytes) {
        std::string block(f.pixels.size(), '\0');
        for (size_t i = 0; i < f.pixels.size(); ++i) {
          block[i] = static_cast<char>(static_cast<uint8_t>(std::lround(f.pixels[i] * 255.0)));
        }
        w.PutBytes(block);
      } else {
        for (double v : f.pixels) w.Put(v);
      }
    }
    PutVec3s(w, rec.ee);
    PutVec3s(w, rec.obj);
    for (double d : rec.distance) w.Put(d);
    for (const auto& a : rec.actions) {
      w.Put(a.delta.x());
      w.Put(a.delta.y());
      w.Put(a.delta.z());
      w.Put(a.gripper);
    }
  }
  const uint32_t crc = Crc32(w.bytes());
  w.Put<uint32_t>(crc);
  return w.Release();
}

std::vector<TrajectoryRecord> ParseArchive(std::string_view bytes) {
  if (bytes.size() < kMagicSize + 12 ||
      bytes.substr(0, kMagicSize) != std::string_view(kMagic, kMagicSize)) {
    throw FormatError("not a trajectory archive");
  }
  BinaryReader head(bytes.substr(kMagicSize));
  const auto version = head.Get<uint32_t>();
  if (version != kArchiveVersion) {
    throw FormatError("archive version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kArchiveVersion) + ")");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  BinaryReader tail(bytes.substr(bytes.size() - 4));
  if (Crc32(body) != tail.Get<uint32_t>()) {
    throw FormatError("archive checksum mismatch (truncated or corrupt)");
  }
  BinaryReader r(body.substr(kMagicSize + 4));
  const auto count = r.Get<uint32_t>();
  std::vector<TrajectoryRecord> out;
  for (uint32_t k = 0; k < count; ++k) {
    TrajectoryRecord rec;
    const auto task = r.Get<uint8_t>();
    if (task >= kNumTasks) throw FormatError("unknown task id in archive");
    rec.task = static_cast<TaskId>(task);
    rec.seed = r.Get<int64_t>();
    rec.success = r.Get<uint8_t>() != 0;
    const int len = static_cast<int>(r.Get<uint32_t>());
    const int h = static_cast<int>(r.Get<uint32_t>());
    const int w = static_cast<int>(r.Get<uint32_t>());
    const bool as_bytes = r.Get<uint8_t>() != 0;
    const size_t px = static_cast<size_t>(h) * w * 3;
    if (px * len * (as_bytes ? 1 : 8) > r.remaining()) throw FormatError("truncated frame block");
    for (int i = 0; i < len; ++i) {
      Frame f(h, w);
      if (as_bytes) {
        const std::string_view block = r.GetBytes(px);
        for (size_t j = 0; j < px; ++j) f.pixels[j] = static_cast<uint8_t>(block[j]) / 255.0;
      } else {
        for (auto& v : f.pixels) v = r.Get<double>();
      }
      rec.frames.push_back(std::move(f));
    }
    rec.ee = GetVec3s(r, len);
    rec.obj = GetVec3s(r, len);
    for (int i = 0; i < len; ++i) rec.distance.push_back(r.Get<double>());
    for (int i = 0; i < len; ++i) {
      envsim::Action a;
      const double x = r.Get<double>(), y = r.Get<double>(), z = r.Get<double>();
      a.delta = Vec3(x, y, z);
      a.gripper = r.Get<double>();
      rec.actions.push_back(a);
    }
    out.push_back(std::move(rec));
  }
  if (!r.AtEnd()) throw FormatError("trailing bytes in archive");
  return out;
}

void WriteArchive(const std::vector<TrajectoryRecord>& records, const std::string& path) {
  WriteFileBytes(path, SerializeArchive(records));
}

std::vector<TrajectoryRecord> ReadArchive(const std::string& path) {
  return ParseArchive(ReadFileBytes(path));
}

}  // namespace vidplan::datasetkit
