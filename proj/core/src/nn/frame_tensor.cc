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

#include "vidplan/nn/frame_tensor.h"

#include <algorithm>

#include "vidplan/common/error.h"

namespace vidplan::nn {

Tensor FramesToTensor(const std::vector<Frame>& frames) {
  if (frames.empty()) throw ShapeError("no frames to stack");
  const int h = frames[0].height, w = frames[0].width;
  const int n = static_cast<int>(frames.size());
  Tensor out({1, 3 * n, h, w});
  for (int f = 0; f < n; ++f) {
    RequireSameShape(frames[0], frames[f]);
    for (int c = 0; c < 3; ++c) {
      double* plane = out.data() + (static_cast<size_t>(3 * f + c) * h * w);
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
          plane[r * w + col] = 2.0 * frames[f].at(r, col, c) - 1.0;
        }
      }
    }
  }
  return out;
}

std::vector<Frame> TensorToFrames(const Tensor& t, int batch_index) {
  if (t.rank() != 4 || t.dim(1) % 3 != 0 || batch_index < 0 ||
      batch_index >= t.dim(0)) {
    throw ShapeError("expected [B, 3k, H, W], got " + t.ShapeString());
  }
  const int n = t.dim(1) / 3, h = t.dim(2), w = t.dim(3);
  const double* base = t.data() + static_cast<size_t>(batch_index) * t.dim(1) * h * w;
  std::vector<Frame> frames;
  frames.reserve(n);
  for (int f = 0; f < n; ++f) {
    Frame fr(h, w);
    for (int c = 0; c < 3; ++c) {
      const double* plane = base + static_cast<size_t>(3 * f + c) * h * w;
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) {
          fr.at(r, col, c) = std::clamp((plane[r * w + col] + 1.0) * 0.5, 0.0, 1.0);
        }
      }
    }
    frames.push_back(std::move(fr));
  }
  return frames;
}

Tensor StackBatch(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("nothing to stack");
  std::vector<int> shape = rows[0].shape();
  if (shape.empty() || shape[0] != 1) throw ShapeError("stacked rows must be [1, ...]");
  shape[0] = static_cast<int>(rows.size());
  Tensor out(shape);
  const size_t per = rows[0].size();
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].SameShape(rows[0])) throw ShapeError("ragged batch");
    std::copy(rows[i].data(), rows[i].data() + per, out.data() + i * per);
  }
  return out;
}

Tensor BatchRow(const Tensor& t, int b) {
  if (t.rank() < 1 || b < 0 || b >= t.dim(0)) throw ShapeError("batch row out of range");
  std::vector<int> shape = t.shape();
  shape[0] = 1;
  Tensor out(shape);
  const size_t per = out.size();
  std::copy(t.data() + b * per, t.data() + (b + 1) * per, out.data());
  return out;
}

}  // namespace vidplan::nn
