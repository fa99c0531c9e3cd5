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

// Small conditional U-Net used by both denoisers. Every residual block is
// modulated by a per-block scale/shift head reading the shared embedding
// (timestep + condition), which is how conditioning reaches all layers.
// 1-D sequences use the same code as [N, C, 1, L] with 1xK kernels.

#ifndef VIDPLAN_NN_UNET_H_
#define VIDPLAN_NN_UNET_H_

#include <string>
#include <vector>

#include "vidplan/nn/layers.h"

namespace vidplan::nn {

struct UNetConfig {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<int> channels = {32, 64};  // one entry per resolution level
  int emb_dim = 64;
  int kernel_h = 3;
  int kernel_w = 3;
  int down_h = 2;  // per-level downsampling factors
  int down_w = 2;
  int groups = 8;  // preferred group count for GroupNorm

  void Validate() const;
  // Throws ShapeError when (h, w) cannot be downsampled through every level.
  void CheckInputExtent(int h, int w) const;
};

class FilmResBlock {
 public:
  FilmResBlock() = default;
  FilmResBlock(ParameterSet& params, const std::string& name, int in, int out,
               int emb_dim, int kernel_h, int kernel_w, int groups, Rng& rng);

  // emb_act is the already-activated embedding, [N, emb_dim].
  Var operator()(const Var& x, const Var& emb_act) const;

 private:
  GroupNormLayer norm1_;
  ConvLayer conv1_;
  int groups2_ = 1;
  LinearLayer film_;
  ConvLayer conv2_;
  ConvLayer skip_;
  bool has_skip_ = false;
  int out_ = 0;
};

class ConditionalUNet {
 public:
  ConditionalUNet() = default;
  ConditionalUNet(ParameterSet& params, const std::string& prefix,
                  UNetConfig cfg, Rng& rng);

  // x [N, in, H, W], emb [N, emb_dim] -> [N, out, H, W].
  Var operator()(const Var& x, const Var& emb) const;

  const UNetConfig& config() const { return cfg_; }

 private:
  UNetConfig cfg_;
  ConvLayer conv_in_;
  std::vector<FilmResBlock> down_blocks_;
  std::vector<ConvLayer> downsamplers_;
  FilmResBlock mid_;
  std::vector<FilmResBlock> up_blocks_;
  std::vector<ConvLayer> upsamplers_;
  GroupNormLayer norm_out_;
  ConvLayer conv_out_;
};

}  // namespace vidplan::nn

#endif  // VIDPLAN_NN_UNET_H_
