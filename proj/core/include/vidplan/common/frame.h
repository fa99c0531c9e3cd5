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

#ifndef VIDPLAN_COMMON_FRAME_H_
#define VIDPLAN_COMMON_FRAME_H_

#include <string>
#include <vector>

#include <Eigen/Core>

namespace vidplan {

using Vec3 = Eigen::Vector3d;

// An RGB raster in row-major HWC layout with intensities in [0, 1].
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Frame() = default;
  Frame(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, fill) {}

  double& at(int row, int col, int ch) {
    return pixels[(static_cast<size_t>(row) * width + col) * 3 + ch];
  }
  double at(int row, int col, int ch) const {
    return pixels[(static_cast<size_t>(row) * width + col) * 3 + ch];
  }

  bool SameShape(const Frame& other) const {
    return height == other.height && width == other.width;
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

// Channel-mean grayscale, row-major HW.
std::vector<double> ToGray(const Frame& frame);

// Portable anymap IO. Reads P2/P3/P5/P6 (gray images are replicated over the
// three channels); writes binary P6.
Frame ReadPnm(const std::string& path);
void WritePpm(const Frame& frame, const std::string& path);

// Throws ShapeError when the frames differ in resolution.
void RequireSameShape(const Frame& a, const Frame& b);

}  // namespace vidplan

#endif  // VIDPLAN_COMMON_FRAME_H_
