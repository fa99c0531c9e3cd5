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

// Reverse-mode automatic differentiation over nn::Tensor.
//
// A Var is a shared handle to a graph node. Operations on Vars that require
// gradients record their parents and a backward closure; Backward() on a
// scalar walks the recorded graph in reverse topological order and
// accumulates into each node's grad. Graphs are freed when the last handle
// to the output goes away. Parameters are long-lived leaf Vars.

#ifndef VIDPLAN_NN_AUTOGRAD_H_
#define VIDPLAN_NN_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <vector>

#include "vidplan/nn/tensor.h"

namespace vidplan::nn {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Tensor& GradBuffer();
};

class Var {
 public:
  Var() = default;

  static Var Leaf(Tensor value, bool requires_grad = false);
  static Var Param(Tensor value) { return Leaf(std::move(value), true); }

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const std::vector<int>& shape() const { return node_->value.shape(); }
  int dim(int axis) const { return node_->value.dim(axis); }
  size_t size() const { return node_->value.size(); }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->GradBuffer(); }
  void ZeroGrad();

  // Seeds d(self)/d(self) = 1 and propagates. Requires a single-element Var.
  void Backward();

  bool defined() const { return node_ != nullptr; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Var MakeResult(Tensor, std::vector<Var>, std::function<void(Node&)>);

  std::shared_ptr<Node> node_;
};

// Builds an op output. The closure is dropped (and parents are not retained)
// when grad mode is off or no parent requires gradients.
Var MakeResult(Tensor value, std::vector<Var> parents,
               std::function<void(Node&)> backward);

bool GradEnabled();

// Disables graph recording for the lifetime of the guard (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

struct Conv2dSpec {
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
};

// Elementwise, identical shapes.
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
Var SiLU(const Var& x);

// y[N,out] = x[N,in] * w[out,in]^T + b[out].
Var Linear(const Var& x, const Var& w, const Var& b);

// x[N,C,H,W], w[O,C,KH,KW], b[O] -> [N,O,OH,OW].
Var Conv2d(const Var& x, const Var& w, const Var& b, const Conv2dSpec& spec);

// Nearest-neighbour upsampling by integer factors on the two trailing axes.
Var UpsampleNearest(const Var& x, int factor_h, int factor_w);

// Normalizes x[N,C,...] over (channel group, spatial) without affine.
Var GroupNorm(const Var& x, int groups, double eps = 1e-5);

// y = x * gamma[c] + beta[c] for x[N,C,...].
Var ChannelAffine(const Var& x, const Var& gamma, const Var& beta);

// Feature-wise modulation: y = x * (1 + scale[n,c]) + shift[n,c].
Var FiLM(const Var& x, const Var& scale, const Var& shift);

// Concatenates along axis 1; all other axes must match.
Var Concat(const std::vector<Var>& parts);

Var Reshape(const Var& x, std::vector<int> shape);

// Rows of table[V,D] selected by index -> [indices.size(), D].
Var Gather(const Var& table, const std::vector<int>& indices);

// out[N,F]: row n is replacement[F] where replace[n], else x[n].
Var ReplaceRows(const Var& x, const Var& replacement,
                const std::vector<bool>& replace);

// Lays out per-sample token rows into a flat [N, slots*D] tensor.
// slot_sources has N*slots entries: >= 0 picks a row of `rows`, -1 picks
// `pad` (a [D] vector).
Var AssembleSlots(const Var& rows, const Var& pad,
                  const std::vector<int>& slot_sources, int n, int slots);

// Softmax over each channel's spatial map, returning expected (x, y) in
// [-1, 1] per channel: [N,C,H,W] -> [N,2C] ordered (x_0, y_0, x_1, ...).
Var SpatialSoftmax(const Var& x);

Var Mean(const Var& x);
Var MeanSquaredError(const Var& a, const Var& b);

}  // namespace vidplan::nn

#endif  // VIDPLAN_NN_AUTOGRAD_H_
