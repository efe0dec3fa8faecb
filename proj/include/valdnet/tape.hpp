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

#ifndef VALDNET_TAPE_HPP_
#define VALDNET_TAPE_HPP_

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "valdnet/kernels.hpp"
#include "valdnet/tensor.hpp"

namespace valdnet {

// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kConv2d,
  kDepthwiseConv2d,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kSigmoid,
  kTanh,
  kSwish,
  kRelu,
  kGlobalAvgPool,
  kSum,
  kMeanRows,
  kReshape,
  kConcat,
  kStack,
  kRow,
  kAffine,
  kBce,
};

// Records operations in execution order so reverse traversal is a valid
// topological order. Every forward result is checked for NaN/Inf.
//
// Binary add/sub/mul broadcast their second operand into the first: shapes
// are right-aligned and each extent of `b` must equal the matching extent of
// `a` or be 1. A per-channel vector therefore broadcasts over a [C,H,W] map
// once reshaped to [C,1,1].
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaf holding a copy of `value`. Gradients reach it but go nowhere else.
  Var constant(Tensor value);
  // Leaf that aliases `param`; the tensor must outlive the tape. If
  // param.requires_grad(), write_parameter_grads() adds into param.grad().
  Var parameter(Tensor& param);
  // Leaf that aliases `value` without ever receiving gradients in place.
  Var frozen(const Tensor& value);

  Var conv2d(Var input, Var kernel, std::size_t stride, Padding padding);
  Var depthwise_conv2d(Var input, Var kernel, std::size_t stride,
                       Padding padding);
  Var matmul(Var a, Var b);
  // W[M,K] times x[K] -> [M].
  Var matvec(Var w, Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var swish(Var x);
  Var relu(Var x);
  // [C,H,W] -> [C] spatial mean.
  Var global_avg_pool(Var x);
  Var sum(Var x);
  // [T,D] -> [D] mean over the leading axis.
  Var mean_rows(Var x);
  Var reshape(Var x, Shape shape);
  // Concatenation of 1-D tensors.
  Var concat(std::span<const Var> parts);
  // Stacks equal-shaped tensors along a new leading axis.
  Var stack(std::span<const Var> parts);
  // Slice `index` along the leading axis.
  Var row(Var x, std::size_t index);
  // scale * x + shift, elementwise.
  Var affine(Var x, double scale, double shift);
  // Binary cross-entropy of a single probability against label 0/1, with p
  // clamped to [1e-7, 1 - 1e-7]; the clamp passes zero gradient.
  Var bce(Var p, double label);

  const Tensor& value(Var v) const;
  std::span<const double> grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  // Reverse sweep from a single-element loss. Afterwards grad(v) holds
  // d loss / d v for every node. The tape can be swept once.
  void propagate(Var loss);
  // Adds leaf gradients into aliased parameters that require grad.
  void write_parameter_grads() const;

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::uint32_t in0 = 0, in1 = 0;
    std::vector<std::uint32_t> inputs;  // concat / stack only
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor* param = nullptr;
    ConvGeometry geometry;
    double scale = 0.0, shift = 0.0;
    std::size_t index = 0;
    std::vector<double> grad;
  };

  Var push(Node node);
  Node& node(Var v);
  const Node& node(Var v) const;
  std::vector<double>& grad_buffer(std::uint32_t id);
  Var binary(OpKind kind, Var a, Var b);
  Var unary(OpKind kind, Var x, Tensor out);
  void backward_node(const Node& n, std::span<const double> g);

  // deque keeps value() references valid while the graph grows.
  std::deque<Node> nodes_;
  bool consumed_ = false;
};

// Full reverse pass: propagate, then write leaf gradients into parameters.
void backward(Tape& tape, Var loss);

}  // namespace valdnet

#endif  // VALDNET_TAPE_HPP_
