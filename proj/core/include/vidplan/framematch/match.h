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

// Composite frame similarity (edges, layout, structure, motion) and the
// goal tracker that walks through the frames of a generated clip.

#ifndef VIDPLAN_FRAMEMATCH_MATCH_H_
#define VIDPLAN_FRAMEMATCH_MATCH_H_

#include <vector>

#include "vidplan/common/frame.h"

namespace vidplan::framematch {

struct MatchConfig {
  double w_geo = 0.35;
  double w_pos = 0.35;
  double w_ssim = 0.2;
  double w_flow = 0.1;
  double tau = 0.8;
  int t_max = 28;
  int ssim_window = 7;
  int block_grid = 4;
  double edge_fraction = 0.2;
  int flow_block = 8;
  int flow_search = 4;

  void Validate() const;  // ConfigError
};

struct MatchScore {
  double total = 0.0;
  double geo = 0.0;
  double pos = 0.0;
  double ssim = 0.0;
  double flow = 0.0;
};

// Grayscale as the channel mean, row-major.
std::vector<double> Gray(const Frame& f);

// Boolean edge map: pixels with a nonzero gradient magnitude ranking within
// the top `fraction` of all pixels (central differences on gray, replicated
// border). Sparse scenes keep every edge; dense texture keeps the strongest.
std::vector<bool> EdgeMap(const Frame& f, double fraction);

// IoU of the two edge sets; 1 when both are empty.
double SimGeo(const Frame& a, const Frame& b, double edge_fraction = 0.2);

// 0.5 * (1 - mean |block mean difference| over a grid x grid partition)
// + 0.5 * (1 - |center-of-mass shift| / diagonal). The center of mass of
// an all-black frame is the image center.
double SimPos(const Frame& a, const Frame& b, int grid = 4);

// Mean SSIM over all valid window positions of the gray frames, with
// C1 = 0.01^2 and C2 = 0.03^2 (L = 1), clamped to [0, 1].
double Ssim(const Frame& a, const Frame& b, int window = 7);

// Block-matching flow from a to b: each full block x block tile of a is
// matched in b within +/-search pixels by SAD (ties go to the smaller
// displacement); the score is 1 / (1 + mean displacement length).
double SimFlow(const Frame& a, const Frame& b, int block = 8, int search = 4);

// Weighted sum of the four components. All throw ShapeError on mismatch.
MatchScore CompositeSimilarity(const Frame& a, const Frame& b, const MatchConfig& cfg = {});

inline constexpr int kFirstGoal = 1;
inline constexpr int kLastGoal = 7;

struct GoalTracker {
  int goal_index = kFirstGoal;  // into the clip's frames 1..7
  int steps_since_switch = 0;

  friend bool operator==(const GoalTracker&, const GoalTracker&) = default;
};

struct TrackerStep {
  GoalTracker tracker;
  bool advanced = false;
  bool forced = false;
  MatchScore score;
};

// Scores `current` against the active goal frame. A match (total >= tau)
// advances; otherwise the counter grows and reaching t_max forces the
// advance. The index never exceeds 7. `clip` holds frame 0 plus 7 goals.
TrackerStep TrackerUpdate(const GoalTracker& tracker, const Frame& current,
                          const std::vector<Frame>& clip, const MatchConfig& cfg = {});

}  // namespace vidplan::framematch

#endif  // VIDPLAN_FRAMEMATCH_MATCH_H_
