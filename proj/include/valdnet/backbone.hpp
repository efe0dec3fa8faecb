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

// EfficientNet-style spatial feature extractor, scaled for desk use:
//   stem 3x3/2 conv -> MBConv stages -> 1x1 top conv -> global average pool.
// Every convolution is followed by a learned per-channel scale and bias
// (there are no batch statistics).

#ifndef VALDNET_BACKBONE_HPP_
#define VALDNET_BACKBONE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "valdnet/tape.hpp"
#include "valdnet/weights.hpp"

namespace valdnet {

struct StageConfig {
  std::size_t expansion = 1;
  std::size_t out_channels = 8;
  std::size_t stride = 1;
  std::size_t repeats = 1;

  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct BackboneConfig {
  std::size_t input_channels = 3;
  std::size_t input_size = 64;
  std::size_t stem_filters = 8;
  std::vector<StageConfig> stages = {{1, 8, 1, 1}, {4, 16, 2, 2}, {4, 32, 2, 2}};
  std::size_t se_reduction = 4;
  std::size_t feature_dim = 32;

  // Throws ContractError on a stride outside {1,2}, zero extents, etc.
  void validate() const;

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

// Static description of one MBConv block.
struct MbconvShape {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t expansion = 1;
  std::size_t stride = 1;
  std::size_t se_reduction = 4;

  std::size_t expanded() const { return in_channels * expansion; }
  std::size_t squeezed() const;
  bool has_skip() const { return stride == 1 && in_channels == out_channels; }
};

// Blocks in execution order, with their "<stage>.<block>" names.
struct BlockPlan {
  std::string name;
  MbconvShape shape;
};
std::vector<BlockPlan> plan_blocks(const BackboneConfig& config);

// Parameter names: <prefix>.stem.conv_{kernel,scale,bias},
// <prefix>.<stage>.<block>.{expand_*,dw_*,se_w1,se_b1,se_w2,se_b2,project_*},
// <prefix>.top.conv_{kernel,scale,bias}.
std::vector<ParamSpec> backbone_params(const BackboneConfig& config,
                                       const std::string& prefix);
std::vector<ParamSpec> squeeze_excite_params(std::size_t channels,
                                             std::size_t squeezed,
                                             const std::string& prefix);
std::vector<ParamSpec> mbconv_params(const MbconvShape& shape,
                                     const std::string& prefix);

// features ⊙ sigmoid(W2·relu(W1·gap(features) + b1) + b2), gate per channel.
Var squeeze_excite(Bindings& w, const std::string& prefix, Var features);

Var mbconv_forward(Bindings& w, const std::string& prefix,
                   const MbconvShape& shape, Var input);

// [C,H,W] frame -> [feature_dim].
Var backbone_forward(Bindings& w, const std::string& prefix,
                     const BackboneConfig& config, Var frame);

// T frames -> [T, feature_dim]; row t depends on frame t only.
Var time_distributed(Bindings& w, const std::string& prefix,
                     const BackboneConfig& config, std::span<const Var> frames);

}  // namespace valdnet

#endif  // VALDNET_BACKBONE_HPP_
