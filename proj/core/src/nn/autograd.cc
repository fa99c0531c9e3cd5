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

#include "vidplan/nn/autograd.h"

#include <cmath>
#include <unordered_set>

#include <Eigen/Core>

#include "vidplan/common/error.h"

namespace vidplan::nn {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

thread_local bool g_grad_enabled = true;

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     a.value().ShapeString() + " vs " +
                     b.value().ShapeString());
  }
}

// Product of the axes after axis 1 (spatial extent for [N,C,...] tensors).
size_t TrailingCount(const Tensor& t) {
  size_t s = 1;
  for (int i = 2; i < t.rank(); ++i) s *= static_cast<size_t>(t.dim(i));
  return s;
}

Node& ParentNode(Node& self, size_t i) { return *self.parents[i]; }

}  // namespace

Tensor& Node::GradBuffer() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var Var::Leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

void Var::ZeroGrad() {
  if (!node_->grad.empty()) node_->grad.Fill(0.0);
}

void Var::Backward() {
  if (node_->value.size() != 1) {
    throw ShapeError("Backward() requires a single-element output");
  }
  if (!node_->requires_grad) return;

  // iterative post-order DFS for a topological order
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->GradBuffer().Fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

Var MakeResult(Tensor value, std::vector<Var> parents,
               std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

bool GradEnabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// ---------------------------------------------------------------- elementwise

Var Add(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Add");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return MakeResult(std::move(out), {a, b}, [](Node& self) {
    for (size_t k = 0; k < 2; ++k) {
      Node& p = ParentNode(self, k);
      if (!p.requires_grad) continue;
      Tensor& g = p.GradBuffer();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var Sub(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Sub");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return MakeResult(std::move(out), {a, b}, [](Node& self) {
    Node& pa = ParentNode(self, 0);
    Node& pb = ParentNode(self, 1);
    if (pa.requires_grad) {
      Tensor& g = pa.GradBuffer();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.GradBuffer();
      for (size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var Mul(const Var& a, const Var& b) {
  RequireSameShape(a, b, "Mul");
  Tensor out = a.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return MakeResult(std::move(out), {a, b}, [](Node& self) {
    Node& pa = ParentNode(self, 0);
    Node& pb = ParentNode(self, 1);
    if (pa.requires_grad) {
      Tensor& g = pa.GradBuffer();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.GradBuffer();
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Var Scale(const Var& a, double s) {
  Tensor out = a.value();
  for (auto& v : out.storage()) v *= s;
  return MakeResult(std::move(out), {a}, [s](Node& self) {
    Tensor& g = ParentNode(self, 0).GradBuffer();
    for (size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Var SiLU(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.storage()) v = v / (1.0 + std::exp(-v));
  return MakeResult(std::move(out), {x}, [](Node& self) {
    Node& p = ParentNode(self, 0);
    Tensor& g = p.GradBuffer();
    for (size_t i = 0; i < g.size(); ++i) {
      const double v = p.value[i];
      const double sig = 1.0 / (1.0 + std::exp(-v));
      g[i] += self.grad[i] * sig * (1.0 + v * (1.0 - sig));
    }
  });
}

// --------------------------------------------------------------------- linear

Var Linear(const Var& x, const Var& w, const Var& b) {
  if (x.value().rank() != 2 || w.value().rank() != 2 ||
      x.dim(1) != w.dim(1) || b.size() != static_cast<size_t>(w.dim(0))) {
    throw ShapeError("Linear: incompatible shapes x" +
                     x.value().ShapeString() + " w" + w.value().ShapeString());
  }
  const int n = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  Tensor out({n, out_dim});
  {
    ConstMatMap xm(x.value().data(), n, in);
    ConstMatMap wm(w.value().data(), out_dim, in);
    MatMap om(out.data(), n, out_dim);
    om.noalias() = xm * wm.transpose();
    Eigen::Map<const Eigen::RowVectorXd> bv(b.value().data(), out_dim);
    om.rowwise() += bv;
  }
  return MakeResult(std::move(out), {x, w, b}, [n, in, out_dim](Node& self) {
    Node& px = ParentNode(self, 0);
    Node& pw = ParentNode(self, 1);
    Node& pb = ParentNode(self, 2);
    ConstMatMap gm(self.grad.data(), n, out_dim);
    if (px.requires_grad) {
      MatMap gx(px.GradBuffer().data(), n, in);
      gx.noalias() += gm * ConstMatMap(pw.value.data(), out_dim, in);
    }
    if (pw.requires_grad) {
      MatMap gw(pw.GradBuffer().data(), out_dim, in);
      gw.noalias() += gm.transpose() * ConstMatMap(px.value.data(), n, in);
    }
    if (pb.requires_grad) {
      Eigen::Map<Eigen::RowVectorXd> gb(pb.GradBuffer().data(), out_dim);
      gb += gm.colwise().sum();
    }
  });
}

// ------------------------------------------------------------------ conv2d

namespace {

struct ConvGeometry {
  int n, c, h, w, o, kh, kw, oh, ow;
  Conv2dSpec spec;
  int ckk() const { return c * kh * kw; }
  int p() const { return oh * ow; }
};

void Im2Col(const double* x, const ConvGeometry& g, double* col) {
  const int p = g.p();
  for (int c = 0; c < g.c; ++c) {
    const double* xc = x + static_cast<size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        double* row = col + static_cast<size_t>((c * g.kh + ki) * g.kw + kj) * p;
        for (int oi = 0; oi < g.oh; ++oi) {
          const int ii = oi * g.spec.stride_h - g.spec.pad_h + ki;
          double* dst = row + static_cast<size_t>(oi) * g.ow;
          if (ii < 0 || ii >= g.h) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const double* src = xc + static_cast<size_t>(ii) * g.w;
          for (int oj = 0; oj < g.ow; ++oj) {
            const int jj = oj * g.spec.stride_w - g.spec.pad_w + kj;
            dst[oj] = (jj >= 0 && jj < g.w) ? src[jj] : 0.0;
          }
        }
      }
    }
  }
}

void Col2ImAdd(const double* col, const ConvGeometry& g, double* x) {
  const int p = g.p();
  for (int c = 0; c < g.c; ++c) {
    double* xc = x + static_cast<size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const double* row =
            col + static_cast<size_t>((c * g.kh + ki) * g.kw + kj) * p;
        for (int oi = 0; oi < g.oh; ++oi) {
          const int ii = oi * g.spec.stride_h - g.spec.pad_h + ki;
          if (ii < 0 || ii >= g.h) continue;
          const double* src = row + static_cast<size_t>(oi) * g.ow;
          double* dst = xc + static_cast<size_t>(ii) * g.w;
          for (int oj = 0; oj < g.ow; ++oj) {
            const int jj = oj * g.spec.stride_w - g.spec.pad_w + kj;
            if (jj >= 0 && jj < g.w) dst[jj] += src[oj];
          }
        }
      }
    }
  }
}

}  // namespace

Var Conv2d(const Var& x, const Var& w, const Var& b, const Conv2dSpec& spec) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 4 || wv.rank() != 4 || xv.dim(1) != wv.dim(1) ||
      b.size() != static_cast<size_t>(wv.dim(0))) {
    throw ShapeError("Conv2d: incompatible shapes x" + xv.ShapeString() +
                     " w" + wv.ShapeString());
  }
  ConvGeometry g{xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0),
                 wv.dim(2), wv.dim(3), 0, 0, spec};
  g.oh = (g.h + 2 * spec.pad_h - g.kh) / spec.stride_h + 1;
  g.ow = (g.w + 2 * spec.pad_w - g.kw) / spec.stride_w + 1;
  if (g.oh <= 0 || g.ow <= 0) throw ShapeError("Conv2d: empty output");

  Tensor out({g.n, g.o, g.oh, g.ow});
  Buffer col(static_cast<size_t>(g.ckk()) * g.p());
  ConstMatMap wm(wv.data(), g.o, g.ckk());
  Eigen::Map<const Eigen::VectorXd> bv(b.value().data(), g.o);
  for (int n = 0; n < g.n; ++n) {
    Im2Col(xv.data() + static_cast<size_t>(n) * g.c * g.h * g.w, g, col.data());
    MatMap om(out.data() + static_cast<size_t>(n) * g.o * g.p(), g.o, g.p());
    om.noalias() = wm * ConstMatMap(col.data(), g.ckk(), g.p());
    om.colwise() += bv;
  }

  return MakeResult(std::move(out), {x, w, b}, [g](Node& self) {
    Node& px = ParentNode(self, 0);
    Node& pw = ParentNode(self, 1);
    Node& pb = ParentNode(self, 2);
    Buffer col(static_cast<size_t>(g.ckk()) * g.p());
    Buffer dcol(px.requires_grad ? col.size() : 0);
    ConstMatMap wm(pw.value.data(), g.o, g.ckk());
    for (int n = 0; n < g.n; ++n) {
      ConstMatMap gm(self.grad.data() + static_cast<size_t>(n) * g.o * g.p(),
                     g.o, g.p());
      if (pw.requires_grad) {
        Im2Col(px.value.data() + static_cast<size_t>(n) * g.c * g.h * g.w, g,
               col.data());
        MatMap gw(pw.GradBuffer().data(), g.o, g.ckk());
        gw.noalias() +=
            gm * ConstMatMap(col.data(), g.ckk(), g.p()).transpose();
      }
      if (pb.requires_grad) {
        Eigen::Map<Eigen::VectorXd> gb(pb.GradBuffer().data(), g.o);
        gb += gm.rowwise().sum();
      }
      if (px.requires_grad) {
        MatMap dc(dcol.data(), g.ckk(), g.p());
        dc.noalias() = wm.transpose() * gm;
        Col2ImAdd(dcol.data(), g,
                  px.GradBuffer().data() +
                      static_cast<size_t>(n) * g.c * g.h * g.w);
      }
    }
  });
}

Var UpsampleNearest(const Var& x, int fh, int fw) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("UpsampleNearest expects [N,C,H,W]");
  const int nc = xv.dim(0) * xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const int oh = h * fh, ow = w * fw;
  Tensor out({xv.dim(0), xv.dim(1), oh, ow});
  for (int k = 0; k < nc; ++k) {
    const double* src = xv.data() + static_cast<size_t>(k) * h * w;
    double* dst = out.data() + static_cast<size_t>(k) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) dst[i * ow + j] = src[(i / fh) * w + j / fw];
    }
  }
  return MakeResult(std::move(out), {x}, [=](Node& self) {
    Tensor& g = ParentNode(self, 0).GradBuffer();
    for (int k = 0; k < nc; ++k) {
      const double* src = self.grad.data() + static_cast<size_t>(k) * oh * ow;
      double* dst = g.data() + static_cast<size_t>(k) * h * w;
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) dst[(i / fh) * w + j / fw] += src[i * ow + j];
      }
    }
  });
}

// --------------------------------------------------------------- normalization

Var GroupNorm(const Var& x, int groups, double eps) {
  const Tensor& xv = x.value();
  if (xv.rank() < 2 || xv.dim(1) % groups != 0) {
    throw ShapeError("GroupNorm: channels must divide into groups");
  }
  const int n = xv.dim(0), c = xv.dim(1);
  const size_t s = TrailingCount(xv);
  const size_t group_size = static_cast<size_t>(c / groups) * s;
  Tensor out(xv.shape());
  std::vector<double> inv_std(static_cast<size_t>(n) * groups);
  for (int k = 0; k < n * groups; ++k) {
    const double* src = xv.data() + k * group_size;
    double* dst = out.data() + k * group_size;
    double mean = 0.0;
    for (size_t i = 0; i < group_size; ++i) mean += src[i];
    mean /= static_cast<double>(group_size);
    double var = 0.0;
    for (size_t i = 0; i < group_size; ++i) {
      const double d = src[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(group_size);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[k] = is;
    for (size_t i = 0; i < group_size; ++i) dst[i] = (src[i] - mean) * is;
  }
  auto y = std::make_shared<Tensor>(out);
  return MakeResult(std::move(out), {x}, [=](Node& self) {
    Tensor& g = ParentNode(self, 0).GradBuffer();
    const double m = static_cast<double>(group_size);
    for (int k = 0; k < n * groups; ++k) {
      const double* dy = self.grad.data() + k * group_size;
      const double* yk = y->data() + k * group_size;
      double* dx = g.data() + k * group_size;
      double sum_dy = 0.0, sum_dy_y = 0.0;
      for (size_t i = 0; i < group_size; ++i) {
        sum_dy += dy[i];
        sum_dy_y += dy[i] * yk[i];
      }
      const double mean_dy = sum_dy / m, mean_dy_y = sum_dy_y / m;
      for (size_t i = 0; i < group_size; ++i) {
        dx[i] += inv_std[k] * (dy[i] - mean_dy - yk[i] * mean_dy_y);
      }
    }
  });
}

Var ChannelAffine(const Var& x, const Var& gamma, const Var& beta) {
  const Tensor& xv = x.value();
  const int n = xv.dim(0), c = xv.dim(1);
  if (gamma.size() != static_cast<size_t>(c) ||
      beta.size() != static_cast<size_t>(c)) {
    throw ShapeError("ChannelAffine: parameter size != channels");
  }
  const size_t s = TrailingCount(xv);
  Tensor out(xv.shape());
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const size_t off = (static_cast<size_t>(i) * c + ch) * s;
      const double ga = gamma.value()[ch], be = beta.value()[ch];
      for (size_t k = 0; k < s; ++k) out[off + k] = xv[off + k] * ga + be;
    }
  }
  return MakeResult(std::move(out), {x, gamma, beta}, [=](Node& self) {
    Node& px = ParentNode(self, 0);
    Node& pg = ParentNode(self, 1);
    Node& pb = ParentNode(self, 2);
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        const size_t off = (static_cast<size_t>(i) * c + ch) * s;
        double sg = 0.0, sb = 0.0;
        for (size_t k = 0; k < s; ++k) {
          sg += self.grad[off + k] * px.value[off + k];
          sb += self.grad[off + k];
        }
        if (pg.requires_grad) pg.GradBuffer()[ch] += sg;
        if (pb.requires_grad) pb.GradBuffer()[ch] += sb;
        if (px.requires_grad) {
          Tensor& gx = px.GradBuffer();
          const double ga = pg.value[ch];
          for (size_t k = 0; k < s; ++k) gx[off + k] += self.grad[off + k] * ga;
        }
      }
    }
  });
}

Var FiLM(const Var& x, const Var& scale, const Var& shift) {
  const Tensor& xv = x.value();
  const int n = xv.dim(0), c = xv.dim(1);
  const std::vector<int> expected{n, c};
  if (scale.shape() != expected || shift.shape() != expected) {
    throw ShapeError("FiLM: scale/shift must be [N,C]");
  }
  const size_t s = TrailingCount(xv);
  Tensor out(xv.shape());
  for (int i = 0; i < n * c; ++i) {
    const double a = 1.0 + scale.value()[i], b = shift.value()[i];
    const size_t off = static_cast<size_t>(i) * s;
    for (size_t k = 0; k < s; ++k) out[off + k] = xv[off + k] * a + b;
  }
  return MakeResult(std::move(out), {x, scale, shift}, [=](Node& self) {
    Node& px = ParentNode(self, 0);
    Node& psc = ParentNode(self, 1);
    Node& psh = ParentNode(self, 2);
    for (int i = 0; i < n * c; ++i) {
      const size_t off = static_cast<size_t>(i) * s;
      double sx = 0.0, sg = 0.0;
      for (size_t k = 0; k < s; ++k) {
        sx += self.grad[off + k] * px.value[off + k];
        sg += self.grad[off + k];
      }
      if (psc.requires_grad) psc.GradBuffer()[i] += sx;
      if (psh.requires_grad) psh.GradBuffer()[i] += sg;
      if (px.requires_grad) {
        Tensor& gx = px.GradBuffer();
        const double a = 1.0 + psc.value[i];
        for (size_t k = 0; k < s; ++k) gx[off + k] += self.grad[off + k] * a;
      }
    }
  });
}

// ----------------------------------------------------------------- reshaping

Var Concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("Concat of nothing");
  const Tensor& first = parts.front().value();
  const int n = first.dim(0);
  const size_t inner = TrailingCount(first);
  std::vector<int> widths;
  int total = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != first.rank() || v.dim(0) != n || TrailingCount(v) != inner) {
      throw ShapeError("Concat: mismatched part " + v.ShapeString());
    }
    for (int a = 2; a < v.rank(); ++a) {
      if (v.dim(a) != first.dim(a)) throw ShapeError("Concat: trailing axes");
    }
    widths.push_back(v.dim(1));
    total += v.dim(1);
  }
  std::vector<int> shape = first.shape();
  shape[1] = total;
  Tensor out(shape);
  for (int i = 0; i < n; ++i) {
    size_t dst = static_cast<size_t>(i) * total * inner;
    for (size_t k = 0; k < parts.size(); ++k) {
      const size_t len = static_cast<size_t>(widths[k]) * inner;
      const double* src = parts[k].value().data() + static_cast<size_t>(i) * len;
      std::copy(src, src + len, out.data() + dst);
      dst += len;
    }
  }
  return MakeResult(std::move(out), parts, [=](Node& self) {
    for (int i = 0; i < n; ++i) {
      size_t src = static_cast<size_t>(i) * total * inner;
      for (size_t k = 0; k < widths.size(); ++k) {
        const size_t len = static_cast<size_t>(widths[k]) * inner;
        Node& p = ParentNode(self, k);
        if (p.requires_grad) {
          double* dst = p.GradBuffer().data() + static_cast<size_t>(i) * len;
          for (size_t j = 0; j < len; ++j) dst[j] += self.grad[src + j];
        }
        src += len;
      }
    }
  });
}

Var Reshape(const Var& x, std::vector<int> shape) {
  Tensor out = x.value().Reshaped(std::move(shape));
  return MakeResult(std::move(out), {x}, [](Node& self) {
    Tensor& g = ParentNode(self, 0).GradBuffer();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var Gather(const Var& table, const std::vector<int>& indices) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw ShapeError("Gather expects a [V,D] table");
  const int rows = tv.dim(0), d = tv.dim(1);
  Tensor out({static_cast<int>(indices.size()), d});
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= rows) {
      throw RangeError("Gather index out of range");
    }
    std::copy_n(tv.data() + static_cast<size_t>(indices[i]) * d, d,
                out.data() + i * d);
  }
  return MakeResult(std::move(out), {table}, [indices, d](Node& self) {
    Tensor& g = ParentNode(self, 0).GradBuffer();
    for (size_t i = 0; i < indices.size(); ++i) {
      double* dst = g.data() + static_cast<size_t>(indices[i]) * d;
      for (int j = 0; j < d; ++j) dst[j] += self.grad[i * d + j];
    }
  });
}

Var ReplaceRows(const Var& x, const Var& replacement,
                const std::vector<bool>& replace) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || replacement.size() != static_cast<size_t>(xv.dim(1)) ||
      replace.size() != static_cast<size_t>(xv.dim(0))) {
    throw ShapeError("ReplaceRows: shape mismatch");
  }
  const int n = xv.dim(0), f = xv.dim(1);
  Tensor out = xv;
  for (int i = 0; i < n; ++i) {
    if (replace[i]) {
      std::copy_n(replacement.value().data(), f,
                  out.data() + static_cast<size_t>(i) * f);
    }
  }
  return MakeResult(std::move(out), {x, replacement}, [=](Node& self) {
    Node& px = ParentNode(self, 0);
    Node& pr = ParentNode(self, 1);
    for (int i = 0; i < n; ++i) {
      const double* gsrc = self.grad.data() + static_cast<size_t>(i) * f;
      if (replace[i]) {
        if (pr.requires_grad) {
          Tensor& g = pr.GradBuffer();
          for (int j = 0; j < f; ++j) g[j] += gsrc[j];
        }
      } else if (px.requires_grad) {
        double* dst = px.GradBuffer().data() + static_cast<size_t>(i) * f;
        for (int j = 0; j < f; ++j) dst[j] += gsrc[j];
      }
    }
  });
}

Var AssembleSlots(const Var& rows, const Var& pad,
                  const std::vector<int>& slot_sources, int n, int slots) {
  const int d = static_cast<int>(pad.size());
  if (slot_sources.size() != static_cast<size_t>(n) * slots ||
      (rows.size() > 0 && rows.dim(1) != d)) {
    throw ShapeError("AssembleSlots: layout mismatch");
  }
  const int num_rows = rows.value().rank() == 2 ? rows.dim(0) : 0;
  Tensor out({n, slots * d});
  for (size_t k = 0; k < slot_sources.size(); ++k) {
    const int src = slot_sources[k];
    if (src >= num_rows) throw RangeError("AssembleSlots: bad row index");
    const double* from = src >= 0
                             ? rows.value().data() + static_cast<size_t>(src) * d
                             : pad.value().data();
    std::copy_n(from, d, out.data() + k * d);
  }
  return MakeResult(std::move(out), {rows, pad}, [=](Node& self) {
    Node& pr = ParentNode(self, 0);
    Node& pp = ParentNode(self, 1);
    for (size_t k = 0; k < slot_sources.size(); ++k) {
      const int src = slot_sources[k];
      const double* g = self.grad.data() + k * d;
      if (src >= 0) {
        if (!pr.requires_grad) continue;
        double* dst = pr.GradBuffer().data() + static_cast<size_t>(src) * d;
        for (int j = 0; j < d; ++j) dst[j] += g[j];
      } else if (pp.requires_grad) {
        double* dst = pp.GradBuffer().data();
        for (int j = 0; j < d; ++j) dst[j] += g[j];
      }
    }
  });
}

Var SpatialSoftmax(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("SpatialSoftmax expects [N,C,H,W]");
  const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const size_t s = static_cast<size_t>(h) * w;
  auto coord = [](int i, int extent) {
    return extent > 1 ? -1.0 + 2.0 * i / (extent - 1) : 0.0;
  };
  auto probs = std::make_shared<std::vector<double>>(xv.size());
  Tensor out({n, 2 * c});
  for (int k = 0; k < n * c; ++k) {
    const double* src = xv.data() + k * s;
    double* p = probs->data() + k * s;
    double mx = src[0];
    for (size_t i = 1; i < s; ++i) mx = std::max(mx, src[i]);
    double z = 0.0;
    for (size_t i = 0; i < s; ++i) z += (p[i] = std::exp(src[i] - mx));
    double ex = 0.0, ey = 0.0;
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double& pij = p[i * w + j];
        pij /= z;
        ex += pij * coord(j, w);
        ey += pij * coord(i, h);
      }
    }
    out[2 * k] = ex;
    out[2 * k + 1] = ey;
  }
  auto expect = std::make_shared<Tensor>(out);
  return MakeResult(std::move(out), {x}, [=](Node& self) {
    Tensor& g = ParentNode(self, 0).GradBuffer();
    for (int k = 0; k < n * c; ++k) {
      const double gx = self.grad[2 * k], gy = self.grad[2 * k + 1];
      const double ex = (*expect)[2 * k], ey = (*expect)[2 * k + 1];
      const double* p = probs->data() + k * s;
      double* dst = g.data() + k * s;
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
          const double pij = p[i * w + j];
          dst[i * w + j] +=
              pij * (gx * (coord(j, w) - ex) + gy * (coord(i, h) - ey));
        }
      }
    }
  });
}

// -------------------------------------------------------------------- losses

Var Mean(const Var& x) {
  double sum = 0.0;
  for (double v : x.value().storage()) sum += v;
  const double count = static_cast<double>(x.size());
  Tensor out({1}, sum / count);
  return MakeResult(std::move(out), {x}, [count](Node& self) {
    Tensor& g = ParentNode(self, 0).GradBuffer();
    const double d = self.grad[0] / count;
    for (auto& v : g.storage()) v += d;
  });
}

Var MeanSquaredError(const Var& a, const Var& b) {
  RequireSameShape(a, b, "MeanSquaredError");
  const double count = static_cast<double>(a.size());
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    sum += d * d;
  }
  Tensor out({1}, sum / count);
  return MakeResult(std::move(out), {a, b}, [count](Node& self) {
    Node& pa = ParentNode(self, 0);
    Node& pb = ParentNode(self, 1);
    const double k = 2.0 * self.grad[0] / count;
    for (size_t i = 0; i < pa.value.size(); ++i) {
      const double d = k * (pa.value[i] - pb.value[i]);
      if (pa.requires_grad) pa.GradBuffer()[i] += d;
      if (pb.requires_grad) pb.GradBuffer()[i] -= d;
    }
  });
}

}  // namespace vidplan::nn
