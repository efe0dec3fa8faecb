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

#include "valdnet/backbone.hpp"

#include <algorithm>

#include "valdnet/errors.hpp"

namespace valdnet {

namespace {

constexpr std::size_t kStemKernel = 3;
constexpr std::size_t kStemStride = 2;
constexpr std::size_t kDepthwiseKernel = 3;

void add_affine(std::vector<ParamSpec>& specs, const std::string& base,
                std::size_t channels) {
  specs.push_back({base + "_scale", {channels, 1, 1}, Init::kOnes, 1});
  specs.push_back({base + "_bias", {channels, 1, 1}, Init::kZeros, 1});
}

Var affine_channels(Bindings& w, const std::string& base, Var x) {
  Tape& t = w.tape();
  return t.add(t.mul(x, w(base + "_scale")), w(base + "_bias"));
}

}  // namespace

void BackboneConfig::validate() const {
  if (input_channels == 0 || input_size == 0 || stem_filters == 0 ||
      feature_dim == 0 || se_reduction == 0) {
    throw ContractError("backbone config extents must be positive");
  }
  if (stages.empty()) throw ContractError("backbone needs at least one stage");
  for (const StageConfig& s : stages) {
    if (s.stride != 1 && s.stride != 2) {
      throw ContractError("stage stride must be 1 or 2");
    }
    if (s.expansion < 1 || s.out_channels == 0 || s.repeats == 0) {
      throw ContractError("stage expansion, channels and repeats must be >= 1");
    }
  }
}

std::size_t MbconvShape::squeezed() const {
  return std::max<std::size_t>(1, expanded() / se_reduction);
}

std::vector<BlockPlan> plan_blocks(const BackboneConfig& config) {
  config.validate();
  std::vector<BlockPlan> plan;
  std::size_t channels = config.stem_filters;
  for (std::size_t s = 0; s < config.stages.size(); ++s) {
    const StageConfig& stage = config.stages[s];
    for (std::size_t b = 0; b < stage.repeats; ++b) {
      MbconvShape shape;
      shape.in_channels = channels;
      shape.out_channels = stage.out_channels;
      shape.expansion = stage.expansion;
      shape.stride = b == 0 ? stage.stride : 1;
      shape.se_reduction = config.se_reduction;
      plan.push_back({std::to_string(s) + "." + std::to_string(b), shape});
      channels = stage.out_channels;
    }
  }
  return plan;
}

std::vector<ParamSpec> squeeze_excite_params(std::size_t channels,
                                             std::size_t squeezed,
                                             const std::string& prefix) {
  return {
      {prefix + "se_w1", {squeezed, channels}, Init::kFanInUniform, channels},
      {prefix + "se_b1", {squeezed}, Init::kZeros, 1},
      {prefix + "se_w2", {channels, squeezed}, Init::kFanInUniform, squeezed},
      {prefix + "se_b2", {channels}, Init::kZeros, 1},
  };
}

std::vector<ParamSpec> mbconv_params(const MbconvShape& shape,
                                     const std::string& prefix) {
  std::vector<ParamSpec> specs;
  const std::size_t in = shape.in_channels;
  const std::size_t mid = shape.expanded();
  if (shape.expansion > 1) {
    specs.push_back({prefix + "expand_kernel", {mid, in, 1, 1},
                     Init::kFanInUniform, in});
    add_affine(specs, prefix + "expand", mid);
  }
  specs.push_back({prefix + "dw_kernel", {mid, kDepthwiseKernel, kDepthwiseKernel},
                   Init::kFanInUniform, kDepthwiseKernel * kDepthwiseKernel});
  add_affine(specs, prefix + "dw", mid);
  for (ParamSpec& p : squeeze_excite_params(mid, shape.squeezed(), prefix)) {
    specs.push_back(std::move(p));
  }
  specs.push_back({prefix + "project_kernel", {shape.out_channels, mid, 1, 1},
                   Init::kFanInUniform, mid});
  add_affine(specs, prefix + "project", shape.out_channels);
  return specs;
}

std::vector<ParamSpec> backbone_params(const BackboneConfig& config,
                                       const std::string& prefix) {
  config.validate();
  std::vector<ParamSpec> specs;
  const std::size_t cin = config.input_channels;
  specs.push_back({prefix + ".stem.conv_kernel",
                   {config.stem_filters, cin, kStemKernel, kStemKernel},
                   Init::kFanInUniform, cin * kStemKernel * kStemKernel});
  add_affine(specs, prefix + ".stem.conv", config.stem_filters);
  std::size_t channels = config.stem_filters;
  for (const BlockPlan& block : plan_blocks(config)) {
    for (ParamSpec& p : mbconv_params(block.shape, prefix + "." + block.name + ".")) {
      specs.push_back(std::move(p));
    }
    channels = block.shape.out_channels;
  }
  specs.push_back({prefix + ".top.conv_kernel", {config.feature_dim, channels, 1, 1},
                   Init::kFanInUniform, channels});
  add_affine(specs, prefix + ".top.conv", config.feature_dim);
  return specs;
}

Var squeeze_excite(Bindings& w, const std::string& prefix, Var features) {
  Tape& t = w.tape();
  const Tensor& f = t.value(features);
  if (f.rank() != 3) throw DimensionError("squeeze_excite expects [C,H,W]");
  const Var pooled = t.global_avg_pool(features);
  const Var hidden =
      t.relu(t.add(t.matvec(w(prefix + "se_w1"), pooled), w(prefix + "se_b1")));
  const Var gate = t.sigmoid(
      t.add(t.matvec(w(prefix + "se_w2"), hidden), w(prefix + "se_b2")));
  return t.mul(features, t.reshape(gate, {f.dim(0), 1, 1}));
}

Var mbconv_forward(Bindings& w, const std::string& prefix,
                   const MbconvShape& shape, Var input) {
  Tape& t = w.tape();
  const Tensor& x = t.value(input);
  if (x.rank() != 3 || x.dim(0) != shape.in_channels) {
    throw DimensionError("mbconv input " + shape_string(x.shape()) +
                         " does not match " +
                         std::to_string(shape.in_channels) + " channels");
  }
  Var h = input;
  if (shape.expansion > 1) {
    h = t.conv2d(h, w(prefix + "expand_kernel"), 1, Padding::kSame);
    h = t.swish(affine_channels(w, prefix + "expand", h));
  }
  h = t.depthwise_conv2d(h, w(prefix + "dw_kernel"), shape.stride,
                         Padding::kSame);
  h = t.swish(affine_channels(w, prefix + "dw", h));
  h = squeeze_excite(w, prefix, h);
  h = t.conv2d(h, w(prefix + "project_kernel"), 1, Padding::kSame);
  h = affine_channels(w, prefix + "project", h);
  if (shape.has_skip()) h = t.add(h, input);
  return h;
}

Var backbone_forward(Bindings& w, const std::string& prefix,
                     const BackboneConfig& config, Var frame) {
  Tape& t = w.tape();
  const Tensor& x = t.value(frame);
  if (x.rank() != 3 || x.dim(0) != config.input_channels ||
      x.dim(1) != config.input_size || x.dim(2) != config.input_size) {
    throw DimensionError(
        "backbone expects [" + std::to_string(config.input_channels) + "," +
        std::to_string(config.input_size) + "," +
        std::to_string(config.input_size) + "], got " + shape_string(x.shape()));
  }
  Var h = t.conv2d(frame, w(prefix + ".stem.conv_kernel"), kStemStride,
                   Padding::kSame);
  h = t.swish(affine_channels(w, prefix + ".stem.conv", h));
  for (const BlockPlan& block : plan_blocks(config)) {
    h = mbconv_forward(w, prefix + "." + block.name + ".", block.shape, h);
  }
  h = t.conv2d(h, w(prefix + ".top.conv_kernel"), 1, Padding::kSame);
  h = t.swish(affine_channels(w, prefix + ".top.conv", h));
  return t.global_avg_pool(h);
}

Var time_distributed(Bindings& w, const std::string& prefix,
                     const BackboneConfig& config, std::span<const Var> frames) {
  if (frames.empty()) throw ContractError("time_distributed needs >= 1 frame");
  Tape& t = w.tape();
  const Shape& first = t.value(frames[0]).shape();
  std::vector<Var> rows;
  rows.reserve(frames.size());
  for (Var f : frames) {
    if (t.value(f).shape() != first) {
      throw DimensionError("time_distributed frames have heterogeneous shapes");
    }
    rows.push_back(backbone_forward(w, prefix, config, f));
  }
  return t.stack(rows);
}

}  // namespace valdnet
