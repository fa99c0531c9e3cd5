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

// Expert trajectory recording, close-contact segmentation, density-aware
// resampling, training-set emission for both models, and the on-disk
// trajectory archive.

#ifndef VIDPLAN_DATASETKIT_DATASET_H_
#define VIDPLAN_DATASETKIT_DATASET_H_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vidplan/actionpolicy/policy.h"
#include "vidplan/envsim/env.h"
#include "vidplan/videodiff/video_model.h"

namespace vidplan::datasetkit {

struct TrajectoryRecord {
  TaskId task = TaskId::kReach;
  int64_t seed = 0;
  bool success = false;
  std::vector<Frame> frames;
  std::vector<Vec3> ee;
  std::vector<Vec3> obj;
  std::vector<double> distance;  // |obj - ee| per step
  // Expert command issued at each step (the last one is what the expert
  // would do from the final state), so every array has length() entries.
  std::vector<envsim::Action> actions;

  int length() const { return static_cast<int>(frames.size()); }
  // Throws ShapeError if the per-step arrays disagree in length.
  void Validate() const;

  friend bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b);
};

// Rolls the scripted expert out until success or max_steps.
TrajectoryRecord RecordTrajectory(const TaskSpec& task, int64_t seed);

struct SegmentationParams {
  int interval = 5;
  double distance_threshold = 0.05;
  int consecutive_frames = 3;
  int recovery_needed_frames = 2;
  bool suppress_single_spike = true;
  int max_allowed_anomaly = 1;

  void Validate() const;  // ConfigError
};

using Interval = std::array<int, 2>;  // inclusive [start, end]

// Hysteresis segmentation of a distance trace into close-contact intervals.
//
// COARSE -> FINE once `consecutive_frames` successive values are at or below
// the threshold; the interval starts at the first frame of that run. After a
// FINE exit, re-entry additionally needs `recovery_needed_frames` values
// above the threshold to have been seen since the exit (the first entry is
// unrestricted). Inside FINE, values above the threshold are anomalies;
// with suppress_single_spike the first anomaly of each streak is not
// counted. FINE exits as soon as the counted anomalies of the current
// streak exceed max_allowed_anomaly; the interval ends at the last frame at
// or below the threshold. An interval still open at the end of the trace
// closes there the same way.
std::vector<Interval> DetectFineIntervals(const std::vector<double>& distances,
                                          const SegmentationParams& p);

// Frame indices kept after resampling: multiples of `interval` outside fine
// intervals, multiples of max(1, round(interval / 5)) inside, plus both
// endpoints. Sorted and unique.
std::vector<int> ResampleIndices(int length, const std::vector<Interval>& fine,
                                 const SegmentationParams& p);

// Sub-record holding only `indices`.
TrajectoryRecord SelectFrames(const TrajectoryRecord& rec, const std::vector<int>& indices);

// Segment + resample in one go.
TrajectoryRecord ResampleTrajectory(const TrajectoryRecord& rec,
                                    const SegmentationParams& p);

// Maps a spatial state to a plan; the rule-based planner by default.
using PlanOracle = std::function<PlanTable(const SpatialState&, TaskId)>;
PlanOracle RulePlanOracle();

// Sliding 8-frame windows over each (already resampled) record; short
// records give one window right-padded with the final frame. Records with
// fewer than 2 frames are skipped. The condition plan comes from the
// window's first state.
std::vector<videodiff::VideoSample> BuildVideoTrainingSet(
    const std::vector<TrajectoryRecord>& records, const PlanOracle& oracle = RulePlanOracle());

struct PolicySetParams {
  int goal_window = 20;  // K
  int horizon = 4;       // H
  uint64_t seed = 0;
};

// One sample per index i < length-1: goal frame drawn from (i, i+K], labels
// are the normalized actions i..i+H-1. Past the end the delta is zero and
// the gripper command holds its last value.
std::vector<policy::PolicySample> BuildPolicyTrainingSet(
    const std::vector<TrajectoryRecord>& records, const PolicySetParams& p);

inline constexpr uint32_t kArchiveVersion = 1;

// Self-describing container: magic, version, record count, then per record
// a header (task, seed, success, length, resolution) followed by the frame,
// position, distance, and action blocks; a CRC32 of everything before it
// closes the file. Frames on the 1/255 grid are stored as bytes, others as
// doubles, so round-trips are exact either way.
std::string SerializeArchive(const std::vector<TrajectoryRecord>& records);
// Throws FormatError on bad magic, version mismatch, truncation, trailing
// bytes, or checksum failure.
std::vector<TrajectoryRecord> ParseArchive(std::string_view bytes);

void WriteArchive(const std::vector<TrajectoryRecord>& records, const std::string& path);
std::vector<TrajectoryRecord> ReadArchive(const std::string& path);

}  // namespace vidplan::datasetkit

#endif  // VIDPLAN_DATASETKIT_DATASET_H_
