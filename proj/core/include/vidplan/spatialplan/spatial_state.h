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

#ifndef VIDPLAN_SPATIALPLAN_SPATIAL_STATE_H_
#define VIDPLAN_SPATIALPLAN_SPATIAL_STATE_H_

#include "vidplan/common/frame.h"

namespace vidplan {

// End-effector and object positions plus their offset. delta_p is always
// p_obj - p_ee; construct through MakeSpatialState to keep that true.
struct SpatialState {
  Vec3 p_ee = Vec3::Zero();
  Vec3 p_obj = Vec3::Zero();
  Vec3 delta_p = Vec3::Zero();
};

inline SpatialState MakeSpatialState(const Vec3& p_ee, const Vec3& p_obj) {
  return SpatialState{p_ee, p_obj, p_obj - p_ee};
}

}  // namespace vidplan

#endif  // VIDPLAN_SPATIALPLAN_SPATIAL_STATE_H_
