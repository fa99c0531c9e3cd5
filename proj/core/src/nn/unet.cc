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

#include "vidplan/nn/unet.h"

#include "vidplan/common/error.h"

namespace vidplan::nn {

void UNetConfig::Validate() const {
  if (in_channels <= 0 || out_channels <= 0) {
    throw ConfigError("U-Net channel counts must be positive");
  }
  if (channels.empty()) throw ConfigError("U-Net needs at least one level");
  for (int c : channels) {
    if (c <= 0) throw ConfigError("U-Net level width must be positive");
  }
  if (emb_dim <= 0 || kernel_h <= 0 || kernel_w <= 0 || kernel_h % 2 == 0 ||
      kernel_w % 2 == 0) {
    throw ConfigError("U-Net kernels must be odd and positive");
  }
  if (down_h < 1 || down_w < 1 || groups < 1) {
    throw ConfigError("invalid U-Net sampling factors");
  }
}

void UNetConfig::CheckInputExtent(int h, int w) const {
  int fh = 1, fw = 1;
  for (size_t i = 1; i < channels.size(); ++i) {
    fh *= down_h;
    fw *= down_w;
  }
  if (h % fh != 0 || w % fw != 0) {
    throw ShapeError("input extent " + std::to_string(h) + "x" +
                     std::to_string(w) + " not divisible by " +
                     std::to_string(fh) + "x" + std::to_string(fw));
  }
}

FilmResBlock::FilmResBlock(ParameterSet& params, const std::string& name,
                           int in, int out, int emb_dim, int kernel_h,
                           int kernel_w, int groups, Rng& rng)
    : out_(out) {
  norm1_ = GroupNormLayer(params, name + ".norm1", in, GroupsFor(in, groups));
  conv1_ = ConvLayer(params, name + ".conv1", in, out, kernel_h, kernel_w, 1, 1, rng);
  groups2_ = GroupsFor(out, groups);
  film_ = LinearLayer(params, name + ".film", emb_dim, 2 * out, rng);
  conv2_ = ConvLayer(params, name + ".conv2", out, out, kernel_h, kernel_w, 1, 1, rng);
  has_skip_ = in != out;
  if (has_skip_) {
    skip_ = ConvLayer(params, name + ".skip", in, out, 1, 1, 1, 1, rng);
  }
}

Var FilmResBlock::operator()(const Var& x, const Var& emb_act) const {
  Var h = conv1_(SiLU(norm1_(x)));
  Var ss = film_(emb_act);  // [N, 2*out] = (scale | shift)
  const int n = ss.dim(0);
  // viewed as [2N, out], even rows are scales and odd rows shifts
  Var halves = Reshape(ss, {n * 2, out_});
  std::vector<int> scale_rows(n), shift_rows(n);
  for (int i = 0; i < n; ++i) {
    scale_rows[i] = 2 * i;
    shift_rows[i] = 2 * i + 1;
  }
  Var scale = Gather(halves, scale_rows);
  Var shift = Gather(halves, shift_rows);
  h = FiLM(GroupNorm(h, groups2_), scale, shift);
  h = conv2_(SiLU(h));
  return Add(h, has_skip_ ? skip_(x) : x);
}

ConditionalUNet::ConditionalUNet(ParameterSet& params, const std::string& prefix,
                                 UNetConfig cfg, Rng& rng)
    : cfg_(std::move(cfg)) {
  cfg_.Validate();
  const auto& ch = cfg_.channels;
  const int levels = static_cast<int>(ch.size());
  const int kh = cfg_.kernel_h, kw = cfg_.kernel_w, e = cfg_.emb_dim,
            g = cfg_.groups;
  conv_in_ = ConvLayer(params, prefix + "conv_in", cfg_.in_channels, ch[0], kh,
                       kw, 1, 1, rng);
  int prev = ch[0];
  for (int i = 0; i < levels; ++i) {
    down_blocks_.emplace_back(params, prefix + "down" + std::to_string(i), prev,
                              ch[i], e, kh, kw, g, rng);
    prev = ch[i];
    if (i + 1 < levels) {
      downsamplers_.emplace_back(params, prefix + "downsample" + std::to_string(i),
                                 prev, prev, kh, kw, cfg_.down_h, cfg_.down_w, rng);
    }
  }
  mid_ = FilmResBlock(params, prefix + "mid", prev, prev, e, kh, kw, g, rng);
  for (int i = levels - 1; i >= 0; --i) {
    up_blocks_.emplace_back(params, prefix + "up" + std::to_string(i),
                            prev + ch[i], ch[i], e, kh, kw, g, rng);
    prev = ch[i];
    if (i > 0) {
      upsamplers_.emplace_back(params, prefix + "upsample" + std::to_string(i),
                               prev, ch[i - 1], kh, kw, 1, 1, rng);
      prev = ch[i - 1];
    }
  }
  norm_out_ = GroupNormLayer(params, prefix + "norm_out", prev, GroupsFor(prev, g));
  // Zero-initialized head: an untrained model predicts eps = 0.
  conv_out_ = ConvLayer(params, prefix + "conv_out", prev, cfg_.out_channels, kh,
                        kw, 1, 1, rng, /*zero_init=*/true);
}

Var ConditionalUNet::operator()(const Var& x, const Var& emb) const {
  if (x.value().rank() != 4 || x.dim(1) != cfg_.in_channels) {
    throw ShapeError("U-Net input must be [N, " + std::to_string(cfg_.in_channels) +
                     ", H, W], got " + x.value().ShapeString());
  }
  if (emb.value().rank() != 2 || emb.dim(0) != x.dim(0) ||
      emb.dim(1) != cfg_.emb_dim) {
    throw ShapeError("U-Net embedding must be [N, emb_dim]");
  }
  cfg_.CheckInputExtent(x.dim(2), x.dim(3));
  const Var emb_act = SiLU(emb);
  const int levels = static_cast<int>(cfg_.channels.size());

  Var h = conv_in_(x);
  std::vector<Var> skips;
  for (int i = 0; i < levels; ++i) {
    h = down_blocks_[i](h, emb_act);
    skips.push_back(h);
    if (i + 1 < levels) h = downsamplers_[i](h);
  }
  h = mid_(h, emb_act);
  for (int j = 0; j < levels; ++j) {
    const int i = levels - 1 - j;
    h = up_blocks_[j](Concat({h, skips[i]}), emb_act);
    if (i > 0) h = upsamplers_[j](UpsampleNearest(h, cfg_.down_h, cfg_.down_w));
  }
  return conv_out_(SiLU(norm_out_(h)));
}

}  // namespace vidplan::nn
