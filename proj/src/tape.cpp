/* Copyright 2026 The ValdNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "valdnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "valdnet/errors.hpp"

namespace valdnet {

namespace kern = kernels::omp;

namespace {

constexpr double kProbFloor = 1e-7;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// For each flat index of `a`, the flat index of the broadcast element of `b`.
// Returns an empty vector when the shapes are identical.
std::vector<std::size_t> broadcast_map(const Shape& a, const Shape& b) {
  if (a == b) return {};
  if (b.size() > a.size()) {
    throw DimensionError("cannot broadcast " + shape_string(b) + " into " +
                         shape_string(a));
  }
  const std::size_t rank = a.size();
  const std::size_t lead = rank - b.size();
  std::vector<std::size_t> b_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t i = b.size(); i-- > 0;) {
    const std::size_t ax = lead + i;
    if (b[i] != a[ax] && b[i] != 1) {
      throw DimensionError("cannot broadcast " + shape_string(b) + " into " +
                           shape_string(a));
    }
    b_stride[ax] = (b[i] == 1) ? 0 : stride;
    stride *= b[i];
  }
  std::vector<std::size_t> map(shape_size(a));
  std::vector<std::size_t> counter(rank, 0);
  std::size_t offset = 0;
  for (std::size_t flat = 0; flat < map.size(); ++flat) {
    map[flat] = offset;
    for (std::size_t ax = rank; ax-- > 0;) {
      if (++counter[ax] < a[ax]) {
        offset += b_stride[ax];
        break;
      }
      offset -= b_stride[ax] * (a[ax] - 1);
      counter[ax] = 0;
    }
  }
  return map;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + " expects rank " +
                         std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

}  // namespace

Var Tape::push(Node n) {
  if (consumed_) throw ContractError("tape already consumed by backward");
  if (!n.external) require_finite(n.owned, "tape forward value");
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw ContractError("variable not on this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("variable not on this tape");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.external ? *n.external : n.owned;
}

std::span<const double> Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.grad;
}

std::vector<double>& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(Var{id}).size(), 0.0);
  return n.grad;
}

Var Tape::constant(Tensor v) {
  Node n;
  n.owned = std::move(v);
  return push(std::move(n));
}

Var Tape::parameter(Tensor& param) {
  require_finite(param, "parameter");
  Node n;
  n.external = &param;
  n.param = &param;
  return push(std::move(n));
}

Var Tape::frozen(const Tensor& value) {
  require_finite(value, "frozen parameter");
  Node n;
  n.external = &value;
  return push(std::move(n));
}

Var Tape::conv2d(Var input, Var kernel, std::size_t stride, Padding padding) {
  const Tensor& x = value(input);
  const Tensor& k = value(kernel);
  require_rank(x, 3, "conv2d input");
  require_rank(k, 4, "conv2d kernel");
  if (k.dim(1) != x.dim(0)) {
    throw DimensionError("conv2d channel mismatch: input " +
                         shape_string(x.shape()) + ", kernel " +
                         shape_string(k.shape()));
  }
  Node n;
  n.kind = OpKind::kConv2d;
  n.in0 = input.id;
  n.in1 = kernel.id;
  n.geometry = conv_geometry(x.dim(1), x.dim(2), k.dim(2), k.dim(3), stride,
                             padding);
  n.owned = Tensor({k.dim(0), n.geometry.out_h, n.geometry.out_w});
  kern::conv2d_forward(x.values(), x.dim(0), k.values(), k.dim(0), n.geometry,
                       n.owned.values());
  return push(std::move(n));
}

Var Tape::depthwise_conv2d(Var input, Var kernel, std::size_t stride,
                           Padding padding) {
  const Tensor& x = value(input);
  const Tensor& k = value(kernel);
  require_rank(x, 3, "depthwise_conv2d input");
  require_rank(k, 3, "depthwise_conv2d kernel");
  if (k.dim(0) != x.dim(0)) {
    throw DimensionError("depthwise_conv2d channel mismatch: input " +
                         shape_string(x.shape()) + ", kernel " +
                         shape_string(k.shape()));
  }
  Node n;
  n.kind = OpKind::kDepthwiseConv2d;
  n.in0 = input.id;
  n.in1 = kernel.id;
  n.geometry = conv_geometry(x.dim(1), x.dim(2), k.dim(1), k.dim(2), stride,
                             padding);
  n.owned = Tensor({x.dim(0), n.geometry.out_h, n.geometry.out_w});
  kern::depthwise_forward(x.values(), x.dim(0), k.values(), n.geometry,
                          n.owned.values());
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_rank(ta, 2, "matmul lhs");
  require_rank(tb, 2, "matmul rhs");
  if (ta.dim(1) != tb.dim(0)) {
    throw DimensionError("matmul inner extents differ: " +
                         shape_string(ta.shape()) + " x " +
                         shape_string(tb.shape()));
  }
  Node n;
  n.kind = OpKind::kMatmul;
  n.in0 = a.id;
  n.in1 = b.id;
  n.owned = Tensor({ta.dim(0), tb.dim(1)});
  kern::matmul(ta.values(), tb.values(), ta.dim(0), ta.dim(1), tb.dim(1),
               n.owned.values());
  return push(std::move(n));
}

Var Tape::matvec(Var w, Var x) {
  const Tensor& tx = value(x);
  require_rank(tx, 1, "matvec vector");
  const Var col = reshape(x, {tx.dim(0), 1});
  const Var prod = matmul(w, col);
  return reshape(prod, {value(prod).dim(0)});
}

Var Tape::binary(OpKind kind, Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  const std::vector<std::size_t> map = broadcast_map(ta.shape(), tb.shape());
  Node n;
  n.kind = kind;
  n.in0 = a.id;
  n.in1 = b.id;
  n.owned = Tensor(ta.shape());
  auto out = n.owned.values();
  auto av = ta.values();
  auto bv = tb.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double rhs = map.empty() ? bv[i] : bv[map[i]];
    switch (kind) {
      case OpKind::kAdd: out[i] = av[i] + rhs; break;
      case OpKind::kSub: out[i] = av[i] - rhs; break;
      default: out[i] = av[i] * rhs; break;
    }
  }
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) { return binary(OpKind::kAdd, a, b); }
Var Tape::sub(Var a, Var b) { return binary(OpKind::kSub, a, b); }
Var Tape::mul(Var a, Var b) { return binary(OpKind::kMul, a, b); }

Var Tape::unary(OpKind kind, Var x, Tensor out) {
  Node n;
  n.kind = kind;
  n.in0 = x.id;
  n.owned = std::move(out);
  return push(std::move(n));
}

Var Tape::sigmoid(Var x) {
  Tensor out = value(x);
  out.set_requires_grad(false);
  for (double& v : out.values()) v = stable_sigmoid(v);
  return unary(OpKind::kSigmoid, x, std::move(out));
}

Var Tape::tanh(Var x) {
  Tensor out = value(x);
  out.set_requires_grad(false);
  for (double& v : out.values()) v = std::tanh(v);
  return unary(OpKind::kTanh, x, std::move(out));
}

Var Tape::swish(Var x) {
  Tensor out = value(x);
  out.set_requires_grad(false);
  for (double& v : out.values()) v = v * stable_sigmoid(v);
  return unary(OpKind::kSwish, x, std::move(out));
}

Var Tape::relu(Var x) {
  Tensor out = value(x);
  out.set_requires_grad(false);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return unary(OpKind::kRelu, x, std::move(out));
}

Var Tape::global_avg_pool(Var x) {
  const Tensor& t = value(x);
  require_rank(t, 3, "global_avg_pool");
  const std::size_t c = t.dim(0), hw = t.dim(1) * t.dim(2);
  Tensor out({c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += t[ch * hw + i];
    out[ch] = acc / static_cast<double>(hw);
  }
  return unary(OpKind::kGlobalAvgPool, x, std::move(out));
}

Var Tape::sum(Var x) {
  double acc = 0.0;
  for (double v : value(x).values()) acc += v;
  return unary(OpKind::kSum, x, Tensor::scalar(acc));
}

Var Tape::mean_rows(Var x) {
  const Tensor& t = value(x);
  require_rank(t, 2, "mean_rows");
  const std::size_t rows = t.dim(0), cols = t.dim(1);
  Tensor out({cols});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c] += t[r * cols + c];
  }
  for (double& v : out.values()) v /= static_cast<double>(rows);
  return unary(OpKind::kMeanRows, x, std::move(out));
}

Var Tape::reshape(Var x, Shape shape) {
  return unary(OpKind::kReshape, x, value(x).reshaped(std::move(shape)));
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat needs at least one input");
  Node n;
  n.kind = OpKind::kConcat;
  std::vector<double> values;
  for (Var p : parts) {
    const Tensor& t = value(p);
    require_rank(t, 1, "concat");
    values.insert(values.end(), t.values().begin(), t.values().end());
    n.inputs.push_back(p.id);
  }
  const std::size_t total = values.size();
  n.owned = Tensor({total}, std::move(values));
  return push(std::move(n));
}

Var Tape::stack(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("stack needs at least one input");
  const Shape& inner = value(parts[0]).shape();
  Node n;
  n.kind = OpKind::kStack;
  std::vector<double> values;
  for (Var p : parts) {
    const Tensor& t = value(p);
    if (t.shape() != inner) {
      throw DimensionError("stack inputs have heterogeneous shapes: " +
                           shape_string(inner) + " vs " +
                           shape_string(t.shape()));
    }
    values.insert(values.end(), t.values().begin(), t.values().end());
    n.inputs.push_back(p.id);
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  n.owned = Tensor(std::move(shape), std::move(values));
  return push(std::move(n));
}

Var Tape::row(Var x, std::size_t index) {
  const Tensor& t = value(x);
  if (t.rank() < 2) throw DimensionError("row needs rank >= 2");
  if (index >= t.dim(0)) throw DimensionError("row index out of range");
  Shape inner(t.shape().begin() + 1, t.shape().end());
  const std::size_t block = shape_size(inner);
  std::vector<double> values(t.values().begin() + index * block,
                             t.values().begin() + (index + 1) * block);
  Node n;
  n.kind = OpKind::kRow;
  n.in0 = x.id;
  n.index = index;
  n.owned = Tensor(std::move(inner), std::move(values));
  return push(std::move(n));
}

Var Tape::affine(Var x, double scale, double shift) {
  Tensor out = value(x);
  out.set_requires_grad(false);
  for (double& v : out.values()) v = scale * v + shift;
  Node n;
  n.kind = OpKind::kAffine;
  n.in0 = x.id;
  n.scale = scale;
  n.shift = shift;
  n.owned = std::move(out);
  return push(std::move(n));
}

Var Tape::bce(Var p, double label) {
  const double prob =
      std::clamp(value(p).item(), kProbFloor, 1.0 - kProbFloor);
  const double loss =
      -(label * std::log(prob) + (1.0 - label) * std::log(1.0 - prob));
  Node n;
  n.kind = OpKind::kBce;
  n.in0 = p.id;
  n.scale = label;
  n.owned = Tensor::scalar(loss);
  return push(std::move(n));
}

void Tape::propagate(Var loss) {
  if (consumed_) throw ContractError("tape already consumed by backward");
  const Tensor& l = value(loss);
  if (l.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_string(l.shape()));
  }
  for (Node& n : nodes_) n.grad.clear();
  grad_buffer(loss.id)[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    if (nodes_[id].grad.empty() || nodes_[id].kind == OpKind::kLeaf) continue;
    // Only buffers of earlier nodes are touched, so `grad` stays valid.
    backward_node(nodes_[id], nodes_[id].grad);
  }
  consumed_ = true;
}

void Tape::backward_node(const Node& n, std::span<const double> g) {
  switch (n.kind) {
    case OpKind::kLeaf:
      return;
    case OpKind::kConv2d: {
      const Tensor& x = value(Var{n.in0});
      const Tensor& k = value(Var{n.in1});
      kern::conv2d_backward_input(g, k.values(), x.dim(0), k.dim(0),
                                  n.geometry, grad_buffer(n.in0));
      kern::conv2d_backward_kernel(g, x.values(), x.dim(0), k.dim(0),
                                   n.geometry, grad_buffer(n.in1));
      return;
    }
    case OpKind::kDepthwiseConv2d: {
      const Tensor& x = value(Var{n.in0});
      const Tensor& k = value(Var{n.in1});
      kern::depthwise_backward_input(g, k.values(), x.dim(0), n.geometry,
                                     grad_buffer(n.in0));
      kern::depthwise_backward_kernel(g, x.values(), x.dim(0), n.geometry,
                                      grad_buffer(n.in1));
      return;
    }
    case OpKind::kMatmul: {
      const Tensor& a = value(Var{n.in0});
      const Tensor& b = value(Var{n.in1});
      const std::size_t m = a.dim(0), k = a.dim(1), cols = b.dim(1);
      kern::matmul_grad_a(g, b.values(), m, k, cols, grad_buffer(n.in0));
      kern::matmul_grad_b(g, a.values(), m, k, cols, grad_buffer(n.in1));
      return;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      const Tensor& a = value(Var{n.in0});
      const Tensor& b = value(Var{n.in1});
      const std::vector<std::size_t> map = broadcast_map(a.shape(), b.shape());
      std::vector<double>& ga = grad_buffer(n.in0);
      std::vector<double>& gb = grad_buffer(n.in1);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t j = map.empty() ? i : map[i];
        if (n.kind == OpKind::kAdd) {
          ga[i] += g[i];
          gb[j] += g[i];
        } else if (n.kind == OpKind::kSub) {
          ga[i] += g[i];
          gb[j] -= g[i];
        } else {
          ga[i] += g[i] * b[j];
          gb[j] += g[i] * a[i];
        }
      }
      return;
    }
    case OpKind::kSigmoid: {
      std::vector<double>& gx = grad_buffer(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.owned[i];
        gx[i] += g[i] * y * (1.0 - y);
      }
      return;
    }
    case OpKind::kTanh: {
      std::vector<double>& gx = grad_buffer(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.owned[i];
        gx[i] += g[i] * (1.0 - y * y);
      }
      return;
    }
    case OpKind::kSwish: {
      const Tensor& x = value(Var{n.in0});
      std::vector<double>& gx = grad_buffer(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = stable_sigmoid(x[i]);
        gx[i] += g[i] * (s + x[i] * s * (1.0 - s));
      }
      return;
    }
    case OpKind::kRelu: {
      const Tensor& x = value(Var{n.in0});
      std::vector<double>& gx = grad_buffer(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) gx[i] += g[i];
      }
      return;
    }
    case OpKind::kGlobalAvgPool: {
      const Tensor& x = value(Var{n.in0});
      const std::size_t hw = x.dim(1) * x.dim(2);
      const double inv = 1.0 / static_cast<double>(hw);
      std::vector<double>& gx = grad_buffer(n.in0);
      for (std::size_t c = 0; c < g.size(); ++c) {
        const double share = g[c] * inv;
        for (std::size_t i = 0; i < hw; ++i) gx[c * hw + i] += share;
      }
      return;
    }
    case OpKind::kSum: {
      std::vector<double>& gx = grad_buffer(n.in0);
      for (double& v : gx) v += g[0];
      return;
    }
    case OpKind::kMeanRows: {
      const Tensor& x = value(Var{n.in0});
      const std::size_t rows = x.dim(0), cols = x.dim(1);
      const double inv = 1.0 / static_cast<double>(rows);
      std::vector<double>& gx = grad_buffer(n.in0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += g[c] * inv;
      }
      return;
    }
    case OpKind::kReshape: {
      std::vector<double>& gx = grad_buffer(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      return;
    }
    case OpKind::kConcat:
    case OpKind::kStack: {
      std::size_t offset = 0;
      for (std::uint32_t id : n.inputs) {
        std::vector<double>& gx = grad_buffer(id);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[offset + i];
        offset += gx.size();
      }
      return;
    }
    case OpKind::kRow: {
      std::vector<double>& gx = grad_buffer(n.in0);
      const std::size_t base = n.index * g.size();
      for (std::size_t i = 0; i < g.size(); ++i) gx[base + i] += g[i];
      return;
    }
    case OpKind::kAffine: {
      std::vector<double>& gx = grad_buffer(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += n.scale * g[i];
      return;
    }
    case OpKind::kBce: {
      const double p = value(Var{n.in0}).item();
      const double y = n.scale;
      if (p < kProbFloor || p > 1.0 - kProbFloor) return;
      grad_buffer(n.in0)[0] += g[0] * (-y / p + (1.0 - y) / (1.0 - p));
      return;
    }
  }
}

void Tape::write_parameter_grads() const {
  for (const Node& n : nodes_) {
    if (!n.param || !n.param->requires_grad() || n.grad.empty()) continue;
    std::span<double> dst = n.param->grad();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
  }
}

void backward(Tape& tape, Var loss) {
  tape.propagate(loss);
  tape.write_parameter_grads();
}

}  // namespace valdnet
