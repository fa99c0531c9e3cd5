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

// Conversions between HWC frames in [0, 1] and NCHW tensors in [-1, 1],
// plus batch stacking / slicing along the leading axis.

#ifndef VIDPLAN_NN_FRAME_TENSOR_H_
#define VIDPLAN_NN_FRAME_TENSOR_H_

#include <vector>

#include "vidplan/common/frame.h"
#include "vidplan/nn/tensor.h"

namespace vidplan::nn {

// [0,1] frames -> [1, 3*frames.size(), H, W] in [-1, 1], frame-major.
Tensor FramesToTensor(const std::vector<Frame>& frames);
// Inverse of FramesToTensor for one batch row; values clamped to [0, 1].
std::vector<Frame> TensorToFrames(const Tensor& t, int batch_index = 0);

// Stacks equally shaped [1, ...] tensors into [B, ...].
Tensor StackBatch(const std::vector<Tensor>& rows);
// Row b of a [B, ...] tensor as [1, ...].
Tensor BatchRow(const Tensor& t, int b);

}  // namespace vidplan::nn

#endif  // VIDPLAN_NN_FRAME_TENSOR_H_
